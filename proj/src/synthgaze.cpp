#include "tpgaze/synthgaze.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"
#include "tpgaze/seed.hpp"

namespace tpgaze {
namespace {

using json = nlohmann::json;

// sin that is exactly odd, so mirrored gazes land on mirrored pixels.
double odd_sin(double a) {
  const double s = std::sin(std::abs(a));
  return a < 0 ? -s : s;
}

constexpr double kEyeHalfWidth = 13.0;
constexpr double kSkinFactor = 0.55;
constexpr double kIrisFactor = 0.35;
constexpr double kPupilIntensity = 0.06;

struct EyeGeometry {
  double half_w, half_h;
  double cx, cy;  // iris center relative to the image center
  double iris_r2, pupil_r2;
  double sclera, skin, iris, pupil;
};

double shade(const EyeGeometry& g, double u, double v) {
  const double eu = u / g.half_w;
  const double ev = v / g.half_h;
  if (eu * eu + ev * ev > 1.0) return g.skin;
  const double du = u - g.cx;
  const double dv = v - g.cy;
  const double r2 = du * du + dv * dv;
  if (r2 <= g.pupil_r2) return g.pupil;
  if (r2 <= g.iris_r2) return g.iris;
  return g.sclera;
}

// Sub-pixel offsets; paired as +-s so mirrored pixels sum the same terms.
constexpr std::array<double, 2> kSub = {0.125, 0.375};

double pixel_value(const EyeGeometry& g, double u, double v) {
  double acc = 0.0;
  for (double sy : kSub) {
    for (double sv : {-sy, sy}) {
      double row = 0.0;
      for (double sx : kSub) row += shade(g, u + sx, v + sv) + shade(g, u - sx, v + sv);
      acc += row;
    }
  }
  return acc / 16.0;
}

std::vector<double> gaussian_taps(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> taps(static_cast<std::size_t>(radius) + 1);
  double total = 0.0;
  for (int k = 0; k <= radius; ++k) {
    taps[static_cast<std::size_t>(k)] = std::exp(-0.5 * k * k / (sigma * sigma));
    total += (k == 0 ? 1.0 : 2.0) * taps[static_cast<std::size_t>(k)];
  }
  for (double& t : taps) t /= total;
  return taps;
}

// Separable blur with clamped edges. Symmetric taps are summed in pairs so a
// mirrored image blurs to the exact mirror.
void blur(std::vector<double>& img, int size, double sigma) {
  const auto taps = gaussian_taps(sigma);
  const int radius = static_cast<int>(taps.size()) - 1;
  auto at = [size](int i) { return std::clamp(i, 0, size - 1); };
  std::vector<double> tmp(img.size());
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double* row = img.data() + static_cast<std::ptrdiff_t>(y) * size;
      double acc = taps[0] * row[x];
      for (int k = 1; k <= radius; ++k) acc += taps[static_cast<std::size_t>(k)] * (row[at(x - k)] + row[at(x + k)]);
      tmp[static_cast<std::size_t>(y * size + x)] = acc;
    }
  }
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double acc = taps[0] * tmp[static_cast<std::size_t>(y * size + x)];
      for (int k = 1; k <= radius; ++k) {
        acc += taps[static_cast<std::size_t>(k)] *
               (tmp[static_cast<std::size_t>(at(y - k) * size + x)] + tmp[static_cast<std::size_t>(at(y + k) * size + x)]);
      }
      img[static_cast<std::size_t>(y * size + x)] = acc;
    }
  }
}

void check_range(double v, double lo, double hi, const char* what) {
  if (!(v >= lo && v <= hi)) {
    throw ConfigError(std::string("synthgaze: ") + what + " = " + std::to_string(v) + " outside [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

}  // namespace

void validate(const PersonSpec& p) {
  check_range(p.eye_aspect, 0.2, 1.0, "eye_aspect");
  check_range(p.iris_radius, 1.0, 10.0, "iris_radius");
  check_range(p.pupil_scale, 0.1, 0.9, "pupil_scale");
  check_range(p.base_intensity, 0.1, 1.0, "base_intensity");
  check_range(p.gaze_bias.pitch, -0.3, 0.3, "gaze_bias.pitch");
  check_range(p.gaze_bias.yaw, -0.3, 0.3, "gaze_bias.yaw");
}

void validate(const DomainSpec& d) {
  if (!(d.contrast_scale > 0)) throw ConfigError("synthgaze: contrast_scale must be > 0");
  if (!(d.additive_noise_sigma >= 0)) throw ConfigError("synthgaze: additive_noise_sigma must be >= 0");
  if (!(d.blur_radius >= 0)) throw ConfigError("synthgaze: blur_radius must be >= 0");
  check_range(d.brightness_shift, -1.0, 1.0, "brightness_shift");
}

Tensor<float> render(const PersonSpec& person, const DomainSpec& domain, const GazeLabel& gaze,
                     std::uint64_t noise_seed) {
  validate(person);
  validate(domain);
  const double pitch = gaze.pitch + person.gaze_bias.pitch;
  const double yaw = gaze.yaw + person.gaze_bias.yaw;
  if (std::abs(pitch) > kMaxRenderAngle || std::abs(yaw) > kMaxRenderAngle) {
    throw ConfigError("render: gaze (" + std::to_string(gaze.pitch) + ", " + std::to_string(gaze.yaw) +
                      ") plus bias exceeds +-pi/3");
  }

  EyeGeometry g;
  g.half_w = kEyeHalfWidth;
  g.half_h = kEyeHalfWidth * person.eye_aspect;
  g.cx = kPupilTravel * odd_sin(yaw);
  g.cy = -kPupilTravel * odd_sin(pitch);  // looking up moves the pupil up
  g.iris_r2 = person.iris_radius * person.iris_radius;
  const double pr = person.iris_radius * person.pupil_scale;
  g.pupil_r2 = pr * pr;
  g.sclera = person.base_intensity;
  g.skin = person.base_intensity * kSkinFactor;
  g.iris = person.base_intensity * kIrisFactor;
  g.pupil = kPupilIntensity;

  const int size = kImageSize;
  const double center = 0.5 * (size - 1);
  std::vector<double> img(static_cast<std::size_t>(size * size));
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      img[static_cast<std::size_t>(y * size + x)] = pixel_value(g, x - center, y - center);
    }
  }
  for (double& v : img) v = (v - 0.5) * domain.contrast_scale + 0.5 + domain.brightness_shift;
  if (domain.blur_radius > 0) blur(img, size, domain.blur_radius);
  if (domain.additive_noise_sigma > 0) {
    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<double> noise(0.0, domain.additive_noise_sigma);
    for (double& v : img) v += noise(rng);
  }
  Tensor<float> out({1, size, size});
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = static_cast<float>(std::clamp(img[i], 0.0, 1.0));
  return out;
}

void ImageBatch::push(const Tensor<float>& image) {
  if (image.size() != image_numel()) {
    throw DimensionError("ImageBatch: image " + shape_str(image.shape()) + " does not match [" +
                         std::to_string(channels_) + "," + std::to_string(size_) + "," + std::to_string(size_) + "]");
  }
  pixels_.insert(pixels_.end(), image.data().begin(), image.data().end());
}

Tensor<float> ImageBatch::slice(int begin, int end) const {
  if (begin < 0 || end > count() || begin >= end) {
    throw DimensionError("ImageBatch: slice [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") outside " + std::to_string(count()) + " images");
  }
  const auto first = pixels_.begin() + static_cast<std::ptrdiff_t>(begin * image_numel());
  const auto last = pixels_.begin() + static_cast<std::ptrdiff_t>(end * image_numel());
  return Tensor<float>({end - begin, channels_, size_, size_}, std::vector<float>(first, last));
}

Tensor<float> ImageBatch::gather(std::span<const int> indices) const {
  if (indices.empty()) throw DimensionError("ImageBatch: gather of zero images");
  std::vector<float> out;
  out.reserve(indices.size() * image_numel());
  for (int i : indices) {
    if (i < 0 || i >= count()) throw DimensionError("ImageBatch: index " + std::to_string(i) + " out of range");
    const auto first = pixels_.begin() + static_cast<std::ptrdiff_t>(i * image_numel());
    out.insert(out.end(), first, first + static_cast<std::ptrdiff_t>(image_numel()));
  }
  return Tensor<float>({static_cast<int>(indices.size()), channels_, size_, size_}, std::move(out));
}

Tensor<float> LabeledSplit::label_slice(int begin, int end) const {
  if (begin < 0 || end > static_cast<int>(labels.size()) || begin >= end) {
    throw DimensionError("LabeledSplit: label slice out of range");
  }
  Tensor<float> out({end - begin, 2});
  for (int i = begin; i < end; ++i) {
    out[static_cast<std::size_t>(2 * (i - begin))] = static_cast<float>(labels[static_cast<std::size_t>(i)].pitch);
    out[static_cast<std::size_t>(2 * (i - begin) + 1)] = static_cast<float>(labels[static_cast<std::size_t>(i)].yaw);
  }
  return out;
}

Tensor<float> LabeledSplit::label_gather(std::span<const int> indices) const {
  Tensor<float> out({static_cast<int>(indices.size()), 2});
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const GazeLabel& l = labels.at(static_cast<std::size_t>(indices[j]));
    out[2 * j] = static_cast<float>(l.pitch);
    out[2 * j + 1] = static_cast<float>(l.yaw);
  }
  return out;
}

LabeledSplit flatten_labeled(const GazeDataset& dataset) {
  LabeledSplit all;
  for (const auto& p : dataset.persons) {
    if (all.images.pixels().empty()) all.images = ImageBatch(p.labeled.images.channels(), p.labeled.images.size());
    auto& px = all.images.pixels();
    px.insert(px.end(), p.labeled.images.pixels().begin(), p.labeled.images.pixels().end());
    all.labels.insert(all.labels.end(), p.labeled.labels.begin(), p.labeled.labels.end());
  }
  return all;
}

namespace {

PersonSpec sample_person(const AppearanceRange& r, int id, std::mt19937_64& rng) {
  auto uni = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto signed_mag = [&](double lo, double hi) {
    const double m = lo == hi ? lo : uni(lo, hi);
    return uni(0.0, 1.0) < 0.5 ? -m : m;
  };
  PersonSpec p;
  p.person_id = id;
  p.eye_aspect = uni(r.aspect_min, r.aspect_max);
  p.iris_radius = uni(r.iris_min, r.iris_max);
  p.pupil_scale = uni(r.pupil_min, r.pupil_max);
  p.base_intensity = uni(r.intensity_min, r.intensity_max);
  p.gaze_bias.pitch = signed_mag(r.bias_min, r.bias_max);
  p.gaze_bias.yaw = signed_mag(r.bias_min, r.bias_max);
  return p;
}

GazeLabel sample_gaze(const BenchmarkConfig& c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pitch(-c.pitch_max, c.pitch_max);
  std::uniform_real_distribution<double> yaw(-c.yaw_max, c.yaw_max);
  // Labels are stored as float32, so keep them float-representable.
  const auto p = static_cast<float>(pitch(rng));
  const auto y = static_cast<float>(yaw(rng));
  return {p, y};
}

void fill_labeled(LabeledSplit& split, const PersonSpec& person, const DomainSpec& domain,
                  const BenchmarkConfig& c, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n; ++i) {
    const GazeLabel g = sample_gaze(c, rng);
    split.images.push(render(person, domain, g, derive_seed(seed, "noise", static_cast<std::uint64_t>(i))));
    split.labels.push_back(g);
  }
}

}  // namespace

Benchmark make_benchmark(const BenchmarkConfig& c, std::uint64_t seed) {
  if (c.n_source_persons < 1 || c.n_samples_each < 1 || c.n_target_persons < 1 || c.n_adapt < 1 ||
      c.n_test < 1 || c.n_val_each < 0) {
    throw ConfigError("make_benchmark: person and sample counts must be positive");
  }
  Benchmark b;
  b.source_train = {"source_train", seed, c.source_domain, {}};
  b.source_val = {"source_val", seed, c.source_domain, {}};
  b.target = {"target", seed, c.target_domain, {}};

  std::mt19937_64 person_rng(derive_seed(seed, "source_persons"));
  for (int i = 0; i < c.n_source_persons; ++i) {
    const PersonSpec person = sample_person(c.source_appearance, i, person_rng);
    PersonDataset train{person, {}, {}};
    fill_labeled(train.labeled, person, c.source_domain, c, c.n_samples_each,
                 derive_seed(seed, "source_train", static_cast<std::uint64_t>(i)));
    b.source_train.persons.push_back(std::move(train));
    PersonDataset val{person, {}, {}};
    fill_labeled(val.labeled, person, c.source_domain, c, c.n_val_each,
                 derive_seed(seed, "source_val", static_cast<std::uint64_t>(i)));
    b.source_val.persons.push_back(std::move(val));
  }

  std::mt19937_64 target_rng(derive_seed(seed, "target_persons"));
  for (int i = 0; i < c.n_target_persons; ++i) {
    const int id = 1000 + i;
    const PersonSpec person = sample_person(c.target_appearance, id, target_rng);
    PersonDataset pd{person, {}, {}};
    LabeledSplit adapt;
    fill_labeled(adapt, person, c.target_domain, c, c.n_adapt,
                 derive_seed(seed, "target_adapt", static_cast<std::uint64_t>(i)));
    pd.adapt.images = std::move(adapt.images);  // labels are dropped here
    fill_labeled(pd.labeled, person, c.target_domain, c, c.n_test,
                 derive_seed(seed, "target_test", static_cast<std::uint64_t>(i)));
    b.target.persons.push_back(std::move(pd));
  }
  return b;
}

// ---- file format -----------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little, "dataset blobs are written in host order");

json to_json(const DomainSpec& d) {
  return {{"brightness_shift", d.brightness_shift},
          {"contrast_scale", d.contrast_scale},
          {"additive_noise_sigma", d.additive_noise_sigma},
          {"blur_radius", d.blur_radius}};
}

DomainSpec domain_from_json(const json& j) {
  return {j.at("brightness_shift").get<double>(), j.at("contrast_scale").get<double>(),
          j.at("additive_noise_sigma").get<double>(), j.at("blur_radius").get<double>()};
}

json to_json(const PersonSpec& p) {
  return {{"person_id", p.person_id},
          {"eye_aspect", p.eye_aspect},
          {"iris_radius", p.iris_radius},
          {"pupil_scale", p.pupil_scale},
          {"base_intensity", p.base_intensity},
          {"gaze_bias", {p.gaze_bias.pitch, p.gaze_bias.yaw}}};
}

PersonSpec person_from_json(const json& j) {
  PersonSpec p;
  p.person_id = j.at("person_id").get<int>();
  p.eye_aspect = j.at("eye_aspect").get<double>();
  p.iris_radius = j.at("iris_radius").get<double>();
  p.pupil_scale = j.at("pupil_scale").get<double>();
  p.base_intensity = j.at("base_intensity").get<double>();
  p.gaze_bias = {j.at("gaze_bias").at(0).get<double>(), j.at("gaze_bias").at(1).get<double>()};
  return p;
}

void write_floats(std::ofstream& out, const float* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
}

}  // namespace

void save_dataset(const GazeDataset& d, const std::filesystem::path& stem) {
  json manifest;
  manifest["format_version"] = kDatasetFormatVersion;
  manifest["kind"] = d.kind;
  manifest["seed"] = d.seed;
  manifest["domain"] = to_json(d.domain);
  manifest["image_shape"] = {1, kImageSize, kImageSize};
  manifest["dtype"] = "float32-le";
  json persons = json::array();
  std::size_t floats = 0;
  for (const auto& p : d.persons) {
    persons.push_back({{"spec", to_json(p.person)},
                       {"n_adapt", p.adapt.images.count()},
                       {"n_labeled", p.labeled.images.count()}});
    floats += p.adapt.images.pixels().size() + p.labeled.images.pixels().size() + 2 * p.labeled.labels.size();
  }
  manifest["persons"] = std::move(persons);
  manifest["blob_floats"] = floats;

  std::filesystem::path json_path = stem;
  json_path += ".json";
  std::filesystem::path bin_path = stem;
  bin_path += ".bin";
  std::ofstream mf(json_path);
  if (!mf) throw IoError("save_dataset: cannot open " + json_path.string());
  mf << manifest.dump(2) << '\n';

  std::ofstream bf(bin_path, std::ios::binary);
  if (!bf) throw IoError("save_dataset: cannot open " + bin_path.string());
  for (const auto& p : d.persons) {
    write_floats(bf, p.adapt.images.pixels().data(), p.adapt.images.pixels().size());
    write_floats(bf, p.labeled.images.pixels().data(), p.labeled.images.pixels().size());
    std::vector<float> labels;
    for (const auto& l : p.labeled.labels) {
      labels.push_back(static_cast<float>(l.pitch));
      labels.push_back(static_cast<float>(l.yaw));
    }
    write_floats(bf, labels.data(), labels.size());
  }
  if (!bf) throw IoError("save_dataset: write failed for " + bin_path.string());
}

GazeDataset load_dataset(const std::filesystem::path& stem) {
  std::filesystem::path json_path = stem;
  json_path += ".json";
  std::filesystem::path bin_path = stem;
  bin_path += ".bin";
  std::ifstream mf(json_path);
  if (!mf) throw IoError("load_dataset: cannot open " + json_path.string());
  json m;
  try {
    m = json::parse(mf);
  } catch (const json::exception& e) {
    throw IoError("load_dataset: malformed manifest " + json_path.string() + ": " + e.what());
  }
  const int version = m.value("format_version", -1);
  if (version != kDatasetFormatVersion) {
    throw IoError("load_dataset: format_version " + std::to_string(version) + " in " + json_path.string() +
                  " is not supported (expected " + std::to_string(kDatasetFormatVersion) + ")");
  }
  const std::size_t image_floats = static_cast<std::size_t>(kImageSize) * kImageSize;

  GazeDataset d;
  std::size_t expected = 0;
  try {
    d.kind = m.at("kind").get<std::string>();
    d.seed = m.at("seed").get<std::uint64_t>();
    d.domain = domain_from_json(m.at("domain"));
    for (const auto& pj : m.at("persons")) {
      PersonDataset p;
      p.person = person_from_json(pj.at("spec"));
      const int n_adapt = pj.at("n_adapt").get<int>();
      const int n_labeled = pj.at("n_labeled").get<int>();
      if (n_adapt < 0 || n_labeled < 0) throw IoError("load_dataset: negative count in manifest");
      p.adapt.images.pixels().resize(static_cast<std::size_t>(n_adapt) * image_floats);
      p.labeled.images.pixels().resize(static_cast<std::size_t>(n_labeled) * image_floats);
      p.labeled.labels.resize(static_cast<std::size_t>(n_labeled));
      expected += static_cast<std::size_t>(n_adapt + n_labeled) * image_floats + 2 * static_cast<std::size_t>(n_labeled);
      d.persons.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw IoError("load_dataset: bad manifest field in " + json_path.string() + ": " + e.what());
  }

  std::ifstream bf(bin_path, std::ios::binary | std::ios::ate);
  if (!bf) throw IoError("load_dataset: cannot open " + bin_path.string());
  const auto bytes = static_cast<std::size_t>(bf.tellg());
  if (bytes != expected * sizeof(float)) {
    throw IoError("load_dataset: size mismatch, " + bin_path.string() + " holds " + std::to_string(bytes) +
                  " bytes but the manifest describes " + std::to_string(expected * sizeof(float)));
  }
  bf.seekg(0);
  auto read = [&bf](float* dst, std::size_t n) {
    bf.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n * sizeof(float)));
  };
  for (auto& p : d.persons) {
    read(p.adapt.images.pixels().data(), p.adapt.images.pixels().size());
    read(p.labeled.images.pixels().data(), p.labeled.images.pixels().size());
    std::vector<float> labels(2 * p.labeled.labels.size());
    read(labels.data(), labels.size());
    for (std::size_t i = 0; i < p.labeled.labels.size(); ++i) p.labeled.labels[i] = {labels[2 * i], labels[2 * i + 1]};
  }
  if (!bf) throw IoError("load_dataset: truncated blob " + bin_path.string());
  return d;
}

}  // namespace tpgaze
