#include "irony/checkpoint.hpp"

#include <fstream>

#include "irony/error.hpp"

namespace irony {
namespace {

using nlohmann::json;

constexpr const char* kGates = "ifog";

json matrix_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

void matrix_from_json(const json& j, Eigen::Ref<Eigen::MatrixXd> m, const std::string& name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != m.rows()) {
    throw ValidationError("checkpoint tensor " + name + " has wrong row count");
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m.cols()) {
      throw ValidationError("checkpoint tensor " + name + " has wrong column count");
    }
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
}

void vector_from_json(const json& j, Eigen::Ref<Eigen::VectorXd> v, const std::string& name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != v.size()) {
    throw ValidationError("checkpoint tensor " + name + " has wrong length");
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
}

json direction_to_json(const DirectionWeights& d, Eigen::Index hid) {
  json out = json::object();
  for (int g = 0; g < 4; ++g) {
    const std::string s(1, kGates[g]);
    out["W_" + s] = matrix_to_json(d.W.middleRows(g * hid, hid));
    out["U_" + s] = matrix_to_json(d.U.middleRows(g * hid, hid));
    out["b_" + s] = vector_to_json(d.b.segment(g * hid, hid));
  }
  return out;
}

void direction_from_json(const json& j, DirectionWeights& d, Eigen::Index hid, const std::string& dir) {
  for (int g = 0; g < 4; ++g) {
    const std::string s(1, kGates[g]);
    for (const char* prefix : {"W_", "U_", "b_"}) {
      if (!j.contains(prefix + s)) throw ValidationError("checkpoint is missing " + dir + "." + prefix + s);
    }
    Eigen::MatrixXd w(hid, d.W.cols()), u(hid, hid);
    Eigen::VectorXd b(hid);
    matrix_from_json(j.at("W_" + s), w, dir + ".W_" + s);
    matrix_from_json(j.at("U_" + s), u, dir + ".U_" + s);
    vector_from_json(j.at("b_" + s), b, dir + ".b_" + s);
    d.W.middleRows(g * hid, hid) = w;
    d.U.middleRows(g * hid, hid) = u;
    d.b.segment(g * hid, hid) = b;
  }
}

}  // namespace

json checkpoint_to_json(const ModelParams& params) {
  check_shapes(params);
  if (!params.w.all_finite()) throw NumericError("refusing to save a checkpoint with non-finite weights");
  json doc = json::object();
  doc["format"] = "irony-bilstm";
  doc["version"] = 1;
  doc["input_dim"] = params.input_dim;
  doc["hidden"] = params.hidden;
  doc["dropout_p"] = params.dropout_p;
  doc["seed"] = params.seed;
  doc["forward"] = direction_to_json(params.w.fwd, params.hidden);
  doc["backward"] = direction_to_json(params.w.bwd, params.hidden);
  doc["w_out"] = vector_to_json(params.w.w_out);
  doc["b_out"] = params.w.b_out;
  return doc;
}

ModelParams checkpoint_from_json(const json& doc) {
  try {
    if (doc.value("format", std::string()) != "irony-bilstm") {
      throw ValidationError("not an irony-bilstm checkpoint");
    }
    ModelParams params;
    params.input_dim = doc.at("input_dim").get<int>();
    params.hidden = doc.at("hidden").get<int>();
    params.dropout_p = doc.at("dropout_p").get<double>();
    params.seed = doc.at("seed").get<std::uint64_t>();
    if (params.input_dim < 1 || params.hidden < 1) throw ValidationError("checkpoint dims must be positive");
    params.w = Weights::zeros(params.input_dim, params.hidden);
    direction_from_json(doc.at("forward"), params.w.fwd, params.hidden, "forward");
    direction_from_json(doc.at("backward"), params.w.bwd, params.hidden, "backward");
    vector_from_json(doc.at("w_out"), params.w.w_out, "w_out");
    params.w.b_out = doc.at("b_out").get<double>();
    check_shapes(params);
    return params;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path, const json& extra) {
  json doc = checkpoint_to_json(params);
  for (auto it = extra.begin(); it != extra.end(); ++it) doc[it.key()] = it.value();
  write_json_file(path, doc);
}

ModelParams load_checkpoint(const std::filesystem::path& path, json* doc_out) {
  json doc = read_json_file(path);
  ModelParams params = checkpoint_from_json(doc);
  if (doc_out != nullptr) *doc_out = std::move(doc);
  return params;
}

}  // namespace irony
