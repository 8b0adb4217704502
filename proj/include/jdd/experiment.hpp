#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "jdd/image.hpp"
#include "jdd/noise.hpp"
#include "jdd/trainer.hpp"

namespace jdd {

inline constexpr const char* kSoftwareVersion = "jdd-doubledip 1.0.0";

enum class Profile { desk, paper };

[[nodiscard]] std::string to_string(Profile profile);
[[nodiscard]] Profile parse_profile(const std::string& name);

struct NoiseSetting {
  NoiseFamily family = NoiseFamily::gaussian;
  double intensity = 30.0;
  [[nodiscard]] std::string label() const;
  friend bool operator==(const NoiseSetting&, const NoiseSetting&) = default;
};

/// Parses "gaussian:10,20,30" or several such groups joined by '|'.
/// Throws ConfigError on malformed input.
[[nodiscard]] std::vector<NoiseSetting> parse_noise_grid(const std::string& text);

struct ExperimentConfig {
  std::filesystem::path dataset;
  std::string glob = "*";
  /// Square center crop; when empty, images are cropped only as far as the
  /// network depth requires.
  std::optional<int> crop;
  std::vector<Method> methods{Method::ours, Method::dip_n, Method::dip_u};
  std::vector<NoiseSetting> noise{{NoiseFamily::gaussian, 30.0}};
  int repeats = 5;
  std::filesystem::path output_dir = "runs";
  std::uint64_t seed = 0;
  int workers = 1;
  bool clip_noise = true;
  bool dump_intermediates = false;
  Profile profile = Profile::desk;
  /// Template for every cell; method and rng_seed are set per cell.
  TrainConfig train;

  /// Desk: 256 crops, 1500 iterations, narrow network. Paper: full images,
  /// 5000 iterations, reference network.
  [[nodiscard]] static ExperimentConfig for_profile(Profile profile);

  /// Throws ConfigError on repeats < 1, workers < 1, an empty method or
  /// noise list, invalid intensities, or a crop that is odd or not divisible
  /// by 2^scales.
  void validate() const;

  /// Hash of every setting that influences a single cell's result (training
  /// hyperparameters, architecture, crop, clipping, software version). Grid
  /// extent, dataset location and output paths are excluded, so grids that
  /// share cells can share results.
  [[nodiscard]] std::string config_hash() const;
};

void to_json(nlohmann::json& j, const Architecture& a);
void from_json(const nlohmann::json& j, Architecture& a);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

// --- Dataset ----------------------------------------------------------------

struct DatasetImage {
  std::string id;  ///< file stem
  RgbImage image;
  int source_height = 0;
  int source_width = 0;
};

/// Loads every lossless image in `directory` matching `glob`, sorted by file
/// name, and center-crops it: to crop x crop when given, otherwise to the
/// largest size divisible by `multiple`. Throws IngestionError naming the
/// file for unreadable or lossy inputs, and DimensionError if an image is
/// smaller than the crop.
[[nodiscard]] std::vector<DatasetImage> ingest_dataset(const std::filesystem::path& directory,
                                                       const std::string& glob,
                                                       std::optional<int> crop, int multiple = 2);

// --- Grid -------------------------------------------------------------------

struct Cell {
  std::string image_id;
  Method method = Method::ours;
  NoiseSetting noise;
  int repeat = 0;

  [[nodiscard]] std::string id() const;
};

/// Noise realization seed; shared by every method on the same image, noise
/// setting and repeat.
[[nodiscard]] std::uint64_t observation_seed(std::uint64_t global_seed, const Cell& cell);
/// Network and input-code seed of one cell.
[[nodiscard]] std::uint64_t cell_seed(std::uint64_t global_seed, const Cell& cell);

/// One run row as persisted in runs.jsonl.
struct RunRecord {
  std::string config_hash;
  std::string dataset;
  Cell cell;
  std::uint64_t cell_seed = 0;
  std::uint64_t noise_seed = 0;
  bool ok = false;
  std::string error;
  MetricResult output;
  MetricResult smoothed;
  std::vector<EvalPoint> trajectory;
  nlohmann::json provenance;
  nlohmann::json artifacts;  ///< image paths relative to the output directory
  double wall_seconds = 0.0;  ///< kept out of runs.jsonl; see timings.jsonl

  /// Identity used for resumption.
  [[nodiscard]] std::string key() const;
};

void to_json(nlohmann::json& j, const RunRecord& r);
void from_json(const nlohmann::json& j, RunRecord& r);

struct GridSummary {
  std::vector<RunRecord> records;  ///< rows of this grid in grid order
  int computed = 0;
  int skipped = 0;
  int failed = 0;
};

/// Runs every (image, method, noise, repeat) cell not already present in
/// <output_dir>/runs.jsonl. Rows are appended as cells finish and the file
/// is rewritten sorted on completion, so repeated executions produce
/// byte-identical files. A failing cell is recorded with ok = false and the
/// grid continues; failed cells are retried on the next execution.
GridSummary run_grid(const ExperimentConfig& config);

/// Reads runs.jsonl; missing file yields an empty list.
[[nodiscard]] std::vector<RunRecord> load_records(const std::filesystem::path& output_dir);

// --- Reporting --------------------------------------------------------------

/// Metric of one repeat averaged over the dataset's images, then mean and
/// population standard deviation over repeats.
struct AggregateRow {
  std::string dataset;
  NoiseSetting noise;
  std::string variant;  ///< method name, "ours_plus" for the smoothed output
  int repeats = 0;
  int images = 0;
  double psnr_mean = 0.0;
  double psnr_std = 0.0;
  double ssim_mean = 0.0;
  double ssim_std = 0.0;
};

/// Groups successful rows by (dataset, noise, variant). Throws UsageError on
/// an empty input.
[[nodiscard]] std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records);

struct ReportFiles {
  std::filesystem::path csv;
  std::filesystem::path markdown;
  std::vector<std::filesystem::path> panels;
};

/// Writes aggregate.csv, tables.md and side-by-side reconstruction panels
/// under `output_dir`. Throws UsageError on an empty input.
ReportFiles write_report(const std::vector<RunRecord>& records,
                         const std::filesystem::path& output_dir);

}  // namespace jdd
