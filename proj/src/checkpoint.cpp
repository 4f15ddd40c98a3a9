#include "tpgaze/checkpoint.hpp"

#include <bit>
#include <fstream>

#include <json.hpp>

#include "tpgaze/errors.hpp"
#include "tpgaze/run_config.hpp"

namespace tpgaze {

using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint blobs are written in host order");

namespace {

void write_blob(const std::filesystem::path& path, const Tensor<float>& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_checkpoint: cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(t.data().data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
  if (!out) throw IoError("save_checkpoint: write failed for " + path.string());
}

Tensor<float> read_blob(const std::filesystem::path& path, const Shape& shape) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("load_checkpoint: missing tensor file " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  const std::size_t expected = shape_numel(shape) * sizeof(float);
  if (bytes != expected) {
    throw DimensionError("load_checkpoint: " + path.string() + " holds " + std::to_string(bytes) + " bytes, shape " +
                         shape_str(shape) + " needs " + std::to_string(expected));
  }
  Tensor<float> t(shape);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(t.data().data()), static_cast<std::streamsize>(bytes));
  if (!in) throw IoError("load_checkpoint: read failed for " + path.string());
  return t;
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto theta_ids = theta_names(c.config);
  const auto prompt_ids = prompt_names(c.config);
  if (theta_ids.size() != c.weights.theta.size() || prompt_ids.size() != c.weights.prompts.size()) {
    throw ConfigError("save_checkpoint: weights do not match the model config");
  }
  const ParamPartition partition = make_partition(c.config);

  json tensors = json::array();
  auto add = [&](const std::string& id, const Tensor<float>& t, const char* side) {
    const std::string file = id + ".bin";
    write_blob(dir / file, t);
    tensors.push_back({{"id", id}, {"shape", t.shape()}, {"file", file}, {"partition", side}});
  };
  for (std::size_t i = 0; i < theta_ids.size(); ++i) add(theta_ids[i], c.weights.theta[i], "frozen");
  for (std::size_t i = 0; i < prompt_ids.size(); ++i) add(prompt_ids[i], c.weights.prompts[i], "prompt");

  json manifest;
  manifest["format_version"] = kCheckpointFormatVersion;
  manifest["stage"] = c.stage;
  manifest["dtype"] = "float32-le";
  manifest["model"] = to_json(c.config);
  manifest["seeds"] = c.seeds;
  manifest["partition"] = {{"frozen_ids", partition.frozen_ids}, {"prompt_ids", partition.prompt_ids}};
  manifest["tensors"] = std::move(tensors);

  const auto path = dir / "manifest.json";
  std::ofstream out(path);
  if (!out) throw IoError("save_checkpoint: cannot open " + path.string());
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("save_checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw IoError("missing checkpoint manifest " + path.string());
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("malformed checkpoint manifest " + path.string() + ": " + e.what());
  }

  Checkpoint c;
  try {
    const int version = m.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw IoError("checkpoint " + path.string() + " has format_version " + std::to_string(version) + ", expected " +
                    std::to_string(kCheckpointFormatVersion));
    }
    c.stage = m.at("stage").get<std::string>();
    c.config = model_config_from_json(m.at("model"), path.string() + ":model");
    c.seeds = m.at("seeds").get<std::map<std::string, std::uint64_t>>();
    validate(c.config);

    const auto theta_ids = theta_names(c.config);
    const auto prompt_ids = prompt_names(c.config);
    const auto& tensors = m.at("tensors");
    if (tensors.size() != theta_ids.size() + prompt_ids.size()) {
      throw IoError("checkpoint " + path.string() + " lists " + std::to_string(tensors.size()) + " tensors, model needs " +
                    std::to_string(theta_ids.size() + prompt_ids.size()));
    }
    // A fresh build gives the expected shapes in canonical order.
    const Model reference = build_model(c.config, 0);
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const bool is_theta = i < theta_ids.size();
      const std::string& id = is_theta ? theta_ids[i] : prompt_ids[i - theta_ids.size()];
      const auto& entry = tensors[i];
      if (entry.at("id").get<std::string>() != id) {
        throw IoError("checkpoint " + path.string() + " tensor " + std::to_string(i) + " is '" +
                      entry.at("id").get<std::string>() + "', expected '" + id + "'");
      }
      const Shape shape = entry.at("shape").get<Shape>();
      const Shape& want = is_theta ? reference.weights.theta[i].shape()
                                   : reference.weights.prompts[i - theta_ids.size()].shape();
      if (shape != want) {
        throw DimensionError("checkpoint " + path.string() + " tensor '" + id + "' has shape " + shape_str(shape) +
                             ", model needs " + shape_str(want));
      }
      Tensor<float> t = read_blob(dir / entry.at("file").get<std::string>(), shape);
      (is_theta ? c.weights.theta : c.weights.prompts).push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw IoError("bad field in checkpoint manifest " + path.string() + ": " + e.what());
  }
  return c;
}

Checkpoint load_checkpoint(const std::filesystem::path& dir, const ModelConfig& expected) {
  Checkpoint c = load_checkpoint(dir);
  if (!(c.config == expected)) {
    throw ConfigError("checkpoint " + (dir / "manifest.json").string() +
                      " was written for a different model architecture than the run config");
  }
  return c;
}

}  // namespace tpgaze
