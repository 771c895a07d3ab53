#include "irony/cli.hpp"

int main(int argc, char** argv) { return irony::cli::run(argc, argv); }
