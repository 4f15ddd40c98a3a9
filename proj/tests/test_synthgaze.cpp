#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <cstring>
#include <iterator>
#include <random>

#include <json.hpp>

#include "tpgaze/autodiff.hpp"
#include "tpgaze/errors.hpp"
#include "tpgaze/synthgaze.hpp"

using namespace tpgaze;
namespace fs = std::filesystem;

namespace {

/// Mirror of a [1,S,S] image along its columns, written out directly.
Tensor<float> mirror(const Tensor<float>& img) {
  const int s = img.dim(2);
  Tensor<float> out(img.shape());
  for (int y = 0; y < s; ++y)
    for (int x = 0; x < s; ++x)
      out[static_cast<std::size_t>(y * s + x)] = img[static_cast<std::size_t>(y * s + (s - 1 - x))];
  return out;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("tpgaze_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

BenchmarkConfig tiny_benchmark() {
  BenchmarkConfig b;
  b.n_source_persons = 2;
  b.n_samples_each = 3;
  b.n_val_each = 2;
  b.n_target_persons = 2;
  b.n_adapt = 3;
  b.n_test = 4;
  return b;
}

}  // namespace

TEST_CASE("straight gaze puts the pupil at the image center") {
  PersonSpec p;
  const DomainSpec clean{};
  const Tensor<float> img = render(p, clean, {0.0, 0.0}, 1);
  CHECK(img.shape() == Shape{1, kImageSize, kImageSize});
  // Darkness below the iris level, weighted, marks the pupil.
  const double iris_level = p.base_intensity * 0.35;
  double wsum = 0.0, cx = 0.0, cy = 0.0;
  for (int y = 0; y < kImageSize; ++y)
    for (int x = 0; x < kImageSize; ++x) {
      const double w = std::max(0.0, iris_level - img[static_cast<std::size_t>(y * kImageSize + x)]);
      wsum += w;
      cx += w * x;
      cy += w * y;
    }
  REQUIRE(wsum > 0.0);
  const double center = 0.5 * (kImageSize - 1);
  CHECK(std::abs(cx / wsum - center) <= 0.5);
  CHECK(std::abs(cy / wsum - center) <= 0.5);
}

TEST_CASE("horizontal flip equals yaw negation, bit-exact") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> aspect(0.4, 0.7), iris(4.5, 6.5), pupil(0.4, 0.6), inten(0.6, 0.9);
  std::uniform_real_distribution<double> pitch(-0.4, 0.4), yaw(-0.6, 0.6), pbias(-0.05, 0.05);
  std::uniform_real_distribution<double> bright(-0.1, 0.1), contrast(0.7, 1.0), blur(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    PersonSpec p{i, aspect(rng), iris(rng), pupil(rng), inten(rng), {pbias(rng), 0.0}};
    const DomainSpec d{bright(rng), contrast(rng), 0.0, i % 2 ? blur(rng) : 0.0};
    const GazeLabel g{pitch(rng), yaw(rng)};
    const Tensor<float> a = render(p, d, g, 1);
    const Tensor<float> b = render(p, d, {g.pitch, -g.yaw}, 2);
    CAPTURE(i);
    CHECK(mirror(a) == b);
  }
}

TEST_CASE("flip with a yaw bias equals the mirrored person") {
  PersonSpec p{0, 0.6, 5.0, 0.45, 0.8, {0.02, 0.04}};
  PersonSpec mirrored = p;
  mirrored.gaze_bias.yaw = -p.gaze_bias.yaw;
  const DomainSpec d{};
  CHECK(mirror(render(p, d, {0.1, 0.3}, 1)) == render(mirrored, d, {0.1, -0.3}, 1));
}

TEST_CASE("rendering is deterministic and seeded") {
  const PersonSpec p;
  const DomainSpec noisy{0.0, 1.0, 0.05, 0.5};
  CHECK(render(p, noisy, {0.1, -0.2}, 5) == render(p, noisy, {0.1, -0.2}, 5));
  CHECK_FALSE(render(p, noisy, {0.1, -0.2}, 5) == render(p, noisy, {0.1, -0.2}, 6));
  const DomainSpec clean{};
  CHECK(render(p, clean, {0.1, -0.2}, 5) == render(p, clean, {0.1, -0.2}, 6));
  const Tensor<float> img = render(p, noisy, {0.3, 0.5}, 9);
  for (float v : img.data()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("out-of-range inputs are rejected") {
  const PersonSpec p;
  CHECK_THROWS_AS(render(p, DomainSpec{}, {0.0, 1.2}, 1), ConfigError);
  PersonSpec biased = p;
  biased.gaze_bias.yaw = 0.1;
  CHECK_THROWS_AS(render(biased, DomainSpec{}, {0.0, 1.0}, 1), ConfigError);
  CHECK_THROWS_AS(render(p, DomainSpec{0.0, 0.0, 0.0, 0.0}, {0.0, 0.0}, 1), ConfigError);
  CHECK_THROWS_AS(render(p, DomainSpec{0.0, 1.0, -0.1, 0.0}, {0.0, 0.0}, 1), ConfigError);
  PersonSpec bad = p;
  bad.iris_radius = 100.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("benchmark structure") {
  const BenchmarkConfig cfg = tiny_benchmark();
  const Benchmark b = make_benchmark(cfg, 3);
  REQUIRE(b.source_train.persons.size() == 2);
  REQUIRE(b.target.persons.size() == 2);
  for (const auto& p : b.source_train.persons) CHECK(p.labeled.images.count() == 3);
  for (const auto& p : b.source_val.persons) CHECK(p.labeled.images.count() == 2);
  for (std::size_t i = 0; i < b.source_train.persons.size(); ++i)
    CHECK(b.source_train.persons[i].person == b.source_val.persons[i].person);
  for (const auto& p : b.target.persons) {
    CHECK(p.adapt.images.count() == 3);
    CHECK(p.labeled.images.count() == 4);
    CHECK(std::abs(p.person.gaze_bias.yaw) >= cfg.target_appearance.bias_min);
    CHECK(std::abs(p.person.gaze_bias.yaw) <= cfg.target_appearance.bias_max);
    for (const auto& g : p.labeled.labels) {
      CHECK(std::abs(g.pitch) <= cfg.pitch_max);
      CHECK(std::abs(g.yaw) <= cfg.yaw_max);
    }
  }
  CHECK(b.target.domain == cfg.target_domain);
  const Benchmark again = make_benchmark(cfg, 3);
  CHECK(again.source_train == b.source_train);
  CHECK(again.target == b.target);
  CHECK_FALSE(make_benchmark(cfg, 4).target == b.target);
  BenchmarkConfig empty = cfg;
  empty.n_target_persons = 0;
  CHECK_THROWS_AS(make_benchmark(empty, 1), ConfigError);
}

TEST_CASE("dataset files") {
  TempDir dir("synthgaze");
  const Benchmark b = make_benchmark(tiny_benchmark(), 7);

  SUBCASE("round trip is exact") {
    save_dataset(b.target, dir.path / "target");
    CHECK(load_dataset(dir.path / "target") == b.target);
    save_dataset(b.source_train, dir.path / "source");
    CHECK(load_dataset(dir.path / "source") == b.source_train);
  }
  SUBCASE("same seed gives identical bytes") {
    save_dataset(b.target, dir.path / "a");
    save_dataset(make_benchmark(tiny_benchmark(), 7).target, dir.path / "b");
    CHECK(read_bytes(dir.path / "a.json") == read_bytes(dir.path / "b.json"));
    CHECK(read_bytes(dir.path / "a.bin") == read_bytes(dir.path / "b.bin"));
  }
  SUBCASE("blob layout is little-endian float32 in manifest order") {
    save_dataset(b.target, dir.path / "t");
    const std::string bytes = read_bytes(dir.path / "t.bin");
    std::size_t expected = 0;
    for (const auto& p : b.target.persons)
      expected += (p.adapt.images.pixels().size() + p.labeled.images.pixels().size() + 2 * p.labeled.labels.size()) * 4;
    REQUIRE(bytes.size() == expected);
    float first = 0.0f;
    const unsigned char* u = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint32_t bits = u[0] | (u[1] << 8) | (u[2] << 16) | (static_cast<std::uint32_t>(u[3]) << 24);
    std::memcpy(&first, &bits, 4);
    CHECK(first == b.target.persons[0].adapt.images.pixels()[0]);
  }
  SUBCASE("wrong count in the manifest is a size mismatch") {
    save_dataset(b.target, dir.path / "t");
    nlohmann::json m = nlohmann::json::parse(read_bytes(dir.path / "t.json"));
    m["persons"][0]["n_labeled"] = m["persons"][0]["n_labeled"].get<int>() + 1;
    std::ofstream(dir.path / "t.json") << m.dump();
    try {
      load_dataset(dir.path / "t");
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("size mismatch") != std::string::npos);
    }
  }
  SUBCASE("version mismatch is rejected") {
    save_dataset(b.target, dir.path / "t");
    nlohmann::json m = nlohmann::json::parse(read_bytes(dir.path / "t.json"));
    m["format_version"] = kDatasetFormatVersion + 1;
    std::ofstream(dir.path / "t.json") << m.dump();
    CHECK_THROWS_AS(load_dataset(dir.path / "t"), IoError);
  }
  SUBCASE("truncated blob is rejected") {
    save_dataset(b.target, dir.path / "t");
    fs::resize_file(dir.path / "t.bin", fs::file_size(dir.path / "t.bin") - 4);
    CHECK_THROWS_AS(load_dataset(dir.path / "t"), IoError);
  }
  SUBCASE("empty dataset") {
    GazeDataset empty;
    empty.kind = "target";
    empty.seed = 1;
    save_dataset(empty, dir.path / "e");
    CHECK(fs::file_size(dir.path / "e.bin") == 0);
    CHECK(load_dataset(dir.path / "e") == empty);
  }
  SUBCASE("missing files") { CHECK_THROWS_AS(load_dataset(dir.path / "nothing"), IoError); }
}
