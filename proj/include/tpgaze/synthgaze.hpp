#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tpgaze/gaze.hpp"
#include "tpgaze/tensor.hpp"

namespace tpgaze {

/// Appearance of one synthetic subject. Rendering has no left/right
/// asymmetric features, so a horizontal flip equals negating yaw and yaw bias.
struct PersonSpec {
  int person_id = 0;
  double eye_aspect = 0.6;      // vertical / horizontal eye opening
  double iris_radius = 5.0;     // pixels
  double pupil_scale = 0.45;    // pupil radius / iris radius
  double base_intensity = 0.85; // sclera brightness
  GazeLabel gaze_bias{};        // rest offset of the pupil, radians

  friend bool operator==(const PersonSpec&, const PersonSpec&) = default;
};

/// Capture conditions shared by a dataset.
struct DomainSpec {
  double brightness_shift = 0.0;
  double contrast_scale = 1.0;
  double additive_noise_sigma = 0.0;
  double blur_radius = 0.0;  // Gaussian sigma in pixels, 0 disables

  friend bool operator==(const DomainSpec&, const DomainSpec&) = default;
};

inline constexpr int kImageSize = 32;
/// Pupil displacement in pixels per unit sine of the gaze angle.
inline constexpr double kPupilTravel = 8.0;
inline constexpr double kMaxRenderAngle = 1.0471975511965976;  // pi/3

void validate(const PersonSpec& person);
void validate(const DomainSpec& domain);

/// Renders a [1,32,32] eye image. Noise is drawn from `noise_seed` only when
/// the domain's sigma is positive. Throws ConfigError for angles (including
/// the person's bias) beyond +-pi/3.
Tensor<float> render(const PersonSpec& person, const DomainSpec& domain, const GazeLabel& gaze,
                     std::uint64_t noise_seed);

/// Contiguous stack of equally shaped single images.
class ImageBatch {
 public:
  ImageBatch() = default;
  ImageBatch(int channels, int size) : channels_(channels), size_(size) {}

  int channels() const { return channels_; }
  int size() const { return size_; }
  int count() const { return static_cast<int>(pixels_.size() / image_numel()); }
  std::size_t image_numel() const { return static_cast<std::size_t>(channels_) * size_ * size_; }
  const std::vector<float>& pixels() const { return pixels_; }
  std::vector<float>& pixels() { return pixels_; }

  void push(const Tensor<float>& image);
  /// Images [begin, end) as a [n,C,S,S] tensor.
  Tensor<float> slice(int begin, int end) const;
  /// Images at `indices`, in that order.
  Tensor<float> gather(std::span<const int> indices) const;

  friend bool operator==(const ImageBatch&, const ImageBatch&) = default;

 private:
  int channels_ = 1;
  int size_ = kImageSize;
  std::vector<float> pixels_;
};

/// Unlabeled personalization images. Carries no labels by construction.
struct AdaptationSplit {
  ImageBatch images;
  friend bool operator==(const AdaptationSplit&, const AdaptationSplit&) = default;
};

struct LabeledSplit {
  ImageBatch images;
  std::vector<GazeLabel> labels;

  /// Labels [begin, end) as a [n,2] tensor.
  Tensor<float> label_slice(int begin, int end) const;
  Tensor<float> label_gather(std::span<const int> indices) const;
  friend bool operator==(const LabeledSplit&, const LabeledSplit&) = default;
};

struct PersonDataset {
  PersonSpec person;
  AdaptationSplit adapt;
  /// Test split for target persons, training samples for source persons.
  LabeledSplit labeled;
  friend bool operator==(const PersonDataset&, const PersonDataset&) = default;
};

struct GazeDataset {
  std::string kind;  // "source_train", "source_val", "target", ...
  std::uint64_t seed = 0;
  DomainSpec domain;
  std::vector<PersonDataset> persons;

  friend bool operator==(const GazeDataset&, const GazeDataset&) = default;
};

/// All labeled samples of every person, person by person.
LabeledSplit flatten_labeled(const GazeDataset& dataset);

/// Sampling range for subject appearance.
struct AppearanceRange {
  double aspect_min = 0.5, aspect_max = 0.7;
  double iris_min = 4.5, iris_max = 5.5;
  double pupil_min = 0.40, pupil_max = 0.50;
  double intensity_min = 0.75, intensity_max = 0.90;
  /// Bias magnitudes are drawn in [min, max] with a random sign.
  double bias_min = 0.0, bias_max = 0.0;

  friend bool operator==(const AppearanceRange&, const AppearanceRange&) = default;
};

struct BenchmarkConfig {
  int n_source_persons = 20;
  int n_samples_each = 200;
  int n_val_each = 20;
  int n_target_persons = 10;
  int n_adapt = 15;
  int n_test = 100;
  double pitch_max = 0.4;
  double yaw_max = 0.6;
  AppearanceRange source_appearance{};
  AppearanceRange target_appearance{0.40, 0.55, 5.5, 6.5, 0.50, 0.60, 0.60, 0.75, 0.02, 0.05};
  DomainSpec source_domain{0.0, 1.0, 0.02, 0.0};
  DomainSpec target_domain{-0.10, 0.70, 0.04, 0.8};

  friend bool operator==(const BenchmarkConfig&, const BenchmarkConfig&) = default;
};

struct Benchmark {
  GazeDataset source_train;
  GazeDataset source_val;
  GazeDataset target;
};

/// Source persons (labeled training + validation samples from the same
/// subjects) and target persons (adaptation images + labeled test split from
/// shifted appearance and harsher capture). Pure function of the config.
Benchmark make_benchmark(const BenchmarkConfig& config, std::uint64_t seed);

inline constexpr int kDatasetFormatVersion = 1;

/// Writes `<stem>.json` (manifest) and `<stem>.bin` (little-endian float32
/// images of every person in manifest order, adapt split first, then labeled
/// images, then labeled (pitch, yaw) pairs).
void save_dataset(const GazeDataset& dataset, const std::filesystem::path& stem);
GazeDataset load_dataset(const std::filesystem::path& stem);

}  // namespace tpgaze
