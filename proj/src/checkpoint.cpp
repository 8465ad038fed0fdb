#include "relatent/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include "relatent/binio.hpp"
#include "relatent/errors.hpp"

namespace relatent {

namespace {

using nlohmann::json;

json manifest_for(const std::vector<std::pair<std::string, TensorPtr>>& items,
                  const std::string& blob_name) {
  json tensors = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : items) {
    json entry;
    entry["name"] = name;
    entry["shape"] = t->shape;
    entry["offset"] = offset;
    entry["count"] = t->numel();
    tensors.push_back(entry);
    offset += static_cast<std::uint64_t>(t->numel()) * sizeof(double);
  }
  json manifest;
  manifest["format"] = "relatent-checkpoint";
  manifest["version"] = 1;
  manifest["dtype"] = "f64";
  manifest["byte_order"] = "little";
  manifest["blob"] = blob_name;
  manifest["total_bytes"] = offset;
  manifest["tensors"] = tensors;
  return manifest;
}

void write_pair(const std::vector<std::pair<std::string, TensorPtr>>& items,
                const std::string& prefix) {
  const std::string blob_name = prefix.substr(prefix.find_last_of('/') + 1) + ".bin";
  {
    auto out = open_out(prefix + ".json", false);
    out << manifest_for(items, blob_name).dump(2) << "\n";
  }
  auto blob = open_out(prefix + ".bin");
  for (const auto& [name, t] : items) {
    write_f64_le(blob, t->data.data(), t->data.size());
  }
  if (!blob) throw IoError("checkpoint: failed writing " + prefix + ".bin");
}

void read_pair(const std::vector<std::pair<std::string, TensorPtr>>& items,
               const std::string& prefix) {
  json manifest;
  {
    auto in = open_in(prefix + ".json", false);
    in >> manifest;
  }
  if (manifest.value("format", "") != "relatent-checkpoint" ||
      manifest.value("dtype", "") != "f64") {
    throw IoError("checkpoint: " + prefix + ".json is not a parameter manifest");
  }
  const auto& tensors = manifest.at("tensors");
  if (tensors.size() != items.size()) {
    throw IoError("checkpoint: manifest lists " + std::to_string(tensors.size()) +
                  " tensors, model has " + std::to_string(items.size()));
  }
  auto blob = open_in(prefix + ".bin");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& entry = tensors[i];
    const auto& [name, t] = items[i];
    if (entry.at("name").get<std::string>() != name) {
      throw IoError("checkpoint: tensor " + std::to_string(i) + " is '" +
                    entry.at("name").get<std::string>() + "', expected '" +
                    name + "'");
    }
    Shape shape = entry.at("shape").get<Shape>();
    if (shape != t->shape) {
      throw IoError("checkpoint: shape mismatch for '" + name + "': file " +
                    shape_str(shape) + ", model " + shape_str(t->shape));
    }
    blob.seekg(static_cast<std::streamoff>(entry.at("offset").get<std::uint64_t>()));
    read_f64_le(blob, t->data.data(), t->data.size());
  }
}

}  // namespace

void save_params(const ParamStore& params, const std::string& prefix) {
  write_pair(params.items(), prefix);
}

void load_params(ParamStore& params, const std::string& prefix) {
  read_pair(params.items(), prefix);
}

void save_optimizer(const AdamOptimizer& opt, const ParamStore& params,
                    const std::string& prefix) {
  auto& m = const_cast<AdamOptimizer&>(opt).first_moments();
  auto& v = const_cast<AdamOptimizer&>(opt).second_moments();
  std::vector<std::pair<std::string, TensorPtr>> items;
  for (std::size_t i = 0; i < params.items().size(); ++i) {
    const auto& [name, t] = params.items()[i];
    items.emplace_back("m:" + name, make_tensor(t->shape, m[i]));
    items.emplace_back("v:" + name, make_tensor(t->shape, v[i]));
  }
  items.emplace_back("step_count", make_tensor(Shape{1}, {static_cast<double>(
                                                  opt.step_count())}));
  write_pair(items, prefix + ".opt");
}

void load_optimizer(AdamOptimizer& opt, const ParamStore& params,
                    const std::string& prefix) {
  auto& m = opt.first_moments();
  auto& v = opt.second_moments();
  std::vector<std::pair<std::string, TensorPtr>> items;
  std::vector<TensorPtr> m_tensors, v_tensors;
  for (const auto& [name, t] : params.items()) {
    m_tensors.push_back(zeros(t->shape));
    v_tensors.push_back(zeros(t->shape));
    items.emplace_back("m:" + name, m_tensors.back());
    items.emplace_back("v:" + name, v_tensors.back());
  }
  auto step = zeros({1});
  items.emplace_back("step_count", step);
  read_pair(items, prefix + ".opt");
  for (std::size_t i = 0; i < m_tensors.size(); ++i) {
    m[i] = m_tensors[i]->data;
    v[i] = v_tensors[i]->data;
  }
  opt.set_step_count(static_cast<long long>(step->data[0]));
}

}  // namespace relatent
