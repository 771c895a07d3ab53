#pragma once

#include <filesystem>

#include <json.hpp>

#include "irony/neural.hpp"

namespace irony {

// Checkpoint document:
//   {"format": "irony-bilstm", "version": 1, "input_dim": k, "hidden": H,
//    "dropout_p": p, "seed": s,
//    "forward":  {"W_i": [[..k..] x H], "W_f", "W_o", "W_g", "U_i".."U_g", "b_i".."b_g"},
//    "backward": {...same keys...},
//    "w_out": [..2H..], "b_out": x}
// Matrices are row-major nested arrays. Doubles are written with 17 significant
// digits so a load/save cycle is exact.
nlohmann::json checkpoint_to_json(const ModelParams& params);
ModelParams checkpoint_from_json(const nlohmann::json& doc);

// `extra` keys are merged into the top-level object (used for per-member
// metadata such as fine-tuned embedding rows).
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path,
                     const nlohmann::json& extra = nlohmann::json::object());
ModelParams load_checkpoint(const std::filesystem::path& path, nlohmann::json* doc_out = nullptr);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace irony
