#include "jdd/experiment.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <queue>
#include <set>
#include <sstream>
#include <thread>

#include "jdd/errors.hpp"
#include "jdd/image_io.hpp"
#include "jdd/rng.hpp"
#include "jdd/tensor_image.hpp"

namespace jdd {

using nlohmann::json;
namespace fs = std::filesystem;

// --- Names ------------------------------------------------------------------

std::string to_string(Profile profile) { return profile == Profile::desk ? "desk" : "paper"; }

Profile parse_profile(const std::string& name) {
  if (name == "desk") return Profile::desk;
  if (name == "paper") return Profile::paper;
  throw ConfigError("unknown profile '" + name + "'");
}

namespace {

std::string format_number(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << v;
  return out.str();
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) parts.push_back(part);
  return parts;
}

}  // namespace

std::string NoiseSetting::label() const {
  return to_string(family) + ":" + format_number(intensity);
}

std::vector<NoiseSetting> parse_noise_grid(const std::string& text) {
  std::vector<NoiseSetting> grid;
  for (const auto& group : split(text, '|')) {
    const auto colon = group.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("noise group '" + group + "' must look like family:v1,v2");
    }
    const NoiseFamily family = parse_noise_family(group.substr(0, colon));
    for (const auto& value : split(group.substr(colon + 1), ',')) {
      std::size_t used = 0;
      double intensity = 0.0;
      try {
        intensity = std::stod(value, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != value.size()) {
        throw ConfigError("bad noise intensity '" + value + "'");
      }
      NoiseSpec{family, intensity}.validate();
      grid.push_back({family, intensity});
    }
  }
  if (grid.empty()) throw ConfigError("empty noise grid");
  return grid;
}

// --- Configuration ----------------------------------------------------------

ExperimentConfig ExperimentConfig::for_profile(Profile profile) {
  ExperimentConfig c;
  c.profile = profile;
  if (profile == Profile::desk) {
    c.crop = 256;
    c.train.iterations = 1500;
    c.train.architecture = Architecture::desk();
  } else {
    c.crop.reset();
    c.train.iterations = 5000;
    c.train.architecture = Architecture::reference();
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (methods.empty()) throw ConfigError("no methods selected");
  if (noise.empty()) throw ConfigError("no noise settings selected");
  for (const auto& n : noise) NoiseSpec{n.family, n.intensity}.validate();
  train.validate();
  if (crop) {
    const int multiple = 1 << train.architecture.scales();
    if (*crop <= 0 || *crop % multiple != 0) {
      throw ConfigError("crop " + std::to_string(*crop) + " must be a positive multiple of " +
                        std::to_string(multiple));
    }
  }
}

void to_json(json& j, const Architecture& a) {
  j = json{{"input_channels", a.input_channels}, {"channels_down", a.channels_down},
           {"channels_up", a.channels_up},       {"channels_skip", a.channels_skip},
           {"filter_down", a.filter_down},       {"filter_up", a.filter_up},
           {"filter_skip", a.filter_skip},       {"up_1x1", a.up_1x1},
           {"leaky_slope", a.leaky_slope}};
}

void from_json(const json& j, Architecture& a) {
  a.input_channels = j.value("input_channels", a.input_channels);
  a.channels_down = j.value("channels_down", a.channels_down);
  a.channels_up = j.value("channels_up", a.channels_up);
  a.channels_skip = j.value("channels_skip", a.channels_skip);
  a.filter_down = j.value("filter_down", a.filter_down);
  a.filter_up = j.value("filter_up", a.filter_up);
  a.filter_skip = j.value("filter_skip", a.filter_skip);
  a.up_1x1 = j.value("up_1x1", a.up_1x1);
  a.leaky_slope = j.value("leaky_slope", a.leaky_slope);
}

namespace {

json seed_spec_json(const SeedSpec& s) {
  return {{"distribution", to_string(s.distribution)}, {"scale", s.scale}};
}

SeedSpec seed_spec_from(const json& j, SeedSpec fallback) {
  if (j.contains("distribution")) {
    const auto d = j.at("distribution").get<std::string>();
    if (d == "normal") {
      fallback.distribution = SeedDistribution::normal;
    } else if (d == "uniform") {
      fallback.distribution = SeedDistribution::uniform;
    } else {
      throw ConfigError("unknown seed distribution '" + d + "'");
    }
  }
  fallback.scale = j.value("scale", fallback.scale);
  return fallback;
}

}  // namespace

void to_json(json& j, const TrainConfig& c) {
  j = json{{"alpha", c.alpha},
           {"lr_dn", c.lr_dn},
           {"lr_dm", c.lr_dm},
           {"iterations", c.iterations},
           {"smoothing_beta", c.smoothing_beta},
           {"eval_every", c.eval_every},
           {"architecture", c.architecture},
           {"normal_seed", seed_spec_json(c.normal_seed)},
           {"uniform_seed", seed_spec_json(c.uniform_seed)},
           {"stop_gradient_guide", c.stop_gradient_guide}};
}

void from_json(const json& j, TrainConfig& c) {
  c.alpha = j.value("alpha", c.alpha);
  c.lr_dn = j.value("lr_dn", c.lr_dn);
  c.lr_dm = j.value("lr_dm", c.lr_dm);
  c.iterations = j.value("iterations", c.iterations);
  c.smoothing_beta = j.value("smoothing_beta", c.smoothing_beta);
  c.eval_every = j.value("eval_every", c.eval_every);
  if (j.contains("architecture")) j.at("architecture").get_to(c.architecture);
  if (j.contains("normal_seed")) c.normal_seed = seed_spec_from(j.at("normal_seed"), c.normal_seed);
  if (j.contains("uniform_seed")) {
    c.uniform_seed = seed_spec_from(j.at("uniform_seed"), c.uniform_seed);
  }
  c.stop_gradient_guide = j.value("stop_gradient_guide", c.stop_gradient_guide);
}

void to_json(json& j, const ExperimentConfig& c) {
  std::vector<std::string> methods;
  for (Method m : c.methods) methods.push_back(to_string(m));
  std::vector<std::string> noise;
  for (const auto& n : c.noise) noise.push_back(n.label());
  j = json{{"profile", to_string(c.profile)},
           {"dataset", c.dataset.string()},
           {"glob", c.glob},
           {"crop", c.crop ? json(*c.crop) : json(nullptr)},
           {"methods", methods},
           {"noise", noise},
           {"repeats", c.repeats},
           {"output_dir", c.output_dir.string()},
           {"seed", c.seed},
           {"workers", c.workers},
           {"clip_noise", c.clip_noise},
           {"dump_intermediates", c.dump_intermediates},
           {"train", c.train}};
}

void from_json(const json& j, ExperimentConfig& c) {
  if (j.contains("profile")) c = ExperimentConfig::for_profile(parse_profile(j.at("profile")));
  c.dataset = j.value("dataset", c.dataset.string());
  c.glob = j.value("glob", c.glob);
  if (j.contains("crop")) {
    c.crop = j.at("crop").is_null() ? std::nullopt : std::optional<int>(j.at("crop").get<int>());
  }
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
  }
  if (j.contains("noise")) {
    c.noise.clear();
    for (const auto& n : j.at("noise")) {
      for (const auto& s : parse_noise_grid(n.get<std::string>())) c.noise.push_back(s);
    }
  }
  c.repeats = j.value("repeats", c.repeats);
  c.output_dir = j.value("output_dir", c.output_dir.string());
  c.seed = j.value("seed", c.seed);
  c.workers = j.value("workers", c.workers);
  c.clip_noise = j.value("clip_noise", c.clip_noise);
  c.dump_intermediates = j.value("dump_intermediates", c.dump_intermediates);
  if (j.contains("train")) j.at("train").get_to(c.train);
}

std::string ExperimentConfig::config_hash() const {
  const json identity{{"software", kSoftwareVersion},
                      {"crop", crop ? json(*crop) : json(nullptr)},
                      {"clip_noise", clip_noise},
                      {"train", train}};
  return hex64(fnv1a(identity.dump()));
}

// --- Dataset ----------------------------------------------------------------

std::vector<DatasetImage> ingest_dataset(const fs::path& directory, const std::string& glob,
                                         std::optional<int> crop, int multiple) {
  if (!fs::is_directory(directory)) {
    throw IngestionError(directory.string() + ": not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (fnmatch(glob.c_str(), name.c_str(), 0) != 0) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<DatasetImage> images;
  for (const auto& file : files) {
    Image pixels = read_image(file);
    const int h = pixels.height();
    const int w = pixels.width();
    int ch = 0;
    int cw = 0;
    if (crop) {
      if (*crop > h || *crop > w) {
        throw DimensionError(file.string() + ": smaller than crop " + std::to_string(*crop));
      }
      ch = cw = *crop;
    } else {
      const int m = std::max(2, multiple);
      ch = h - h % m;
      cw = w - w % m;
    }
    if (ch != h || cw != w) pixels = center_crop(pixels, ch, cw);
    images.push_back({file.stem().string(), RgbImage(std::move(pixels)), h, w});
  }
  return images;
}

// --- Cells and records ------------------------------------------------------

std::string Cell::id() const {
  return image_id + "|" + to_string(method) + "|" + noise.label() + "|r" + std::to_string(repeat);
}

std::uint64_t observation_seed(std::uint64_t global_seed, const Cell& cell) {
  return derive_seed(global_seed,
                     "observation|" + cell.image_id + "|" + cell.noise.label() + "|r" +
                         std::to_string(cell.repeat));
}

std::uint64_t cell_seed(std::uint64_t global_seed, const Cell& cell) {
  return derive_seed(global_seed, "cell|" + cell.id());
}

std::string RunRecord::key() const {
  return config_hash + "|" + dataset + "|" + cell.id() + "|" + hex64(cell_seed);
}

namespace {

json metric_value(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double metric_from(const json& j) {
  if (j.is_string()) {
    return j.get<std::string>() == "inf" ? std::numeric_limits<double>::infinity()
                                         : -std::numeric_limits<double>::infinity();
  }
  return j.get<double>();
}

json metric_json(const MetricResult& m) {
  return {{"psnr", metric_value(m.psnr)}, {"ssim", metric_value(m.ssim)}};
}

MetricResult metric_result_from(const json& j) {
  return {metric_from(j.at("psnr")), metric_from(j.at("ssim"))};
}

}  // namespace

void to_json(json& j, const RunRecord& r) {
  json trajectory = json::array();
  for (const auto& e : r.trajectory) {
    trajectory.push_back({e.iteration, metric_value(e.output.psnr), metric_value(e.output.ssim),
                          metric_value(e.smoothed.psnr), metric_value(e.smoothed.ssim)});
  }
  j = json{{"key", r.key()},
           {"config_hash", r.config_hash},
           {"dataset", r.dataset},
           {"image", r.cell.image_id},
           {"method", to_string(r.cell.method)},
           {"noise",
            {{"family", to_string(r.cell.noise.family)},
             {"intensity", r.cell.noise.intensity},
             {"seed", r.noise_seed}}},
           {"repeat", r.cell.repeat},
           {"cell_seed", r.cell_seed},
           {"status", r.ok ? "ok" : "failed"}};
  if (!r.ok) j["error"] = r.error;
  if (r.ok) {
    j["final"] = {{"output", metric_json(r.output)}, {"smoothed", metric_json(r.smoothed)}};
    j["trajectory"] = std::move(trajectory);
  }
  j["artifacts"] = r.artifacts.is_null() ? json::object() : r.artifacts;
  j["provenance"] = r.provenance;
}

void from_json(const json& j, RunRecord& r) {
  r.config_hash = j.at("config_hash").get<std::string>();
  r.dataset = j.at("dataset").get<std::string>();
  r.cell.image_id = j.at("image").get<std::string>();
  r.cell.method = parse_method(j.at("method").get<std::string>());
  const auto& noise = j.at("noise");
  r.cell.noise = {parse_noise_family(noise.at("family")), noise.at("intensity").get<double>()};
  r.noise_seed = noise.at("seed").get<std::uint64_t>();
  r.cell.repeat = j.at("repeat").get<int>();
  r.cell_seed = j.at("cell_seed").get<std::uint64_t>();
  r.ok = j.at("status").get<std::string>() == "ok";
  r.error = j.value("error", "");
  r.trajectory.clear();
  if (r.ok) {
    r.output = metric_result_from(j.at("final").at("output"));
    r.smoothed = metric_result_from(j.at("final").at("smoothed"));
    for (const auto& e : j.at("trajectory")) {
      r.trajectory.push_back({e.at(0).get<int>(),
                              {metric_from(e.at(1)), metric_from(e.at(2))},
                              {metric_from(e.at(3)), metric_from(e.at(4))}});
    }
  }
  r.artifacts = j.value("artifacts", json::object());
  r.provenance = j.value("provenance", json::object());
}

namespace {

constexpr const char* kRunsFile = "runs.jsonl";
constexpr const char* kTimingsFile = "timings.jsonl";

std::string file_token(const std::string& text) {
  std::string out = text;
  for (char& ch : out) {
    if (ch == ':' || ch == '|' || ch == '/' || ch == ' ') ch = '-';
  }
  return out;
}

void write_records(const fs::path& file, const std::map<std::string, RunRecord>& records) {
  const fs::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    for (const auto& [key, record] : records) out << json(record).dump() << '\n';
  }
  fs::rename(tmp, file);
}

}  // namespace

std::vector<RunRecord> load_records(const fs::path& output_dir) {
  std::vector<RunRecord> records;
  std::ifstream in(output_dir / kRunsFile);
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    try {
      records.push_back(json::parse(line).get<RunRecord>());
    } catch (const json::exception& e) {
      // A run interrupted mid-write leaves a truncated last line.
      std::cerr << "warning: skipping malformed row " << line_number << " of "
                << (output_dir / kRunsFile).string() << ": " << e.what() << '\n';
    }
  }
  return records;
}

// --- Grid execution ---------------------------------------------------------

namespace {

struct CellJob {
  std::size_t index;
  const DatasetImage* image;
  Cell cell;
};

struct CellOutcome {
  std::size_t index;
  RunRecord record;
  std::optional<Image> observation;
  std::optional<Image> output;
  std::optional<Image> smoothed;
  std::vector<std::pair<int, Image>> intermediates;
};

struct GridPaths {
  fs::path image_dir;  ///< relative to the output directory
  std::string stem;    ///< file stem shared by the cell's artifacts
  std::string observation_stem;
};

GridPaths cell_paths(const std::string& hash, const std::string& dataset, const Cell& cell) {
  const fs::path dir = fs::path("recon") / hash / file_token(dataset) / file_token(cell.image_id);
  const std::string noise = file_token(cell.noise.label());
  const std::string repeat = "r" + std::to_string(cell.repeat);
  return {dir, to_string(cell.method) + "_" + noise + "_" + repeat,
          "observation_" + noise + "_" + repeat};
}

CellOutcome run_cell(const ExperimentConfig& config, const std::string& hash,
                     const std::string& dataset, const CellJob& job) {
  CellOutcome outcome;
  outcome.index = job.index;
  RunRecord& r = outcome.record;
  r.config_hash = hash;
  r.dataset = dataset;
  r.cell = job.cell;
  r.cell_seed = cell_seed(config.seed, job.cell);
  r.noise_seed = observation_seed(config.seed, job.cell);

  TrainConfig cell_config = config.train;
  cell_config.method = job.cell.method;
  cell_config.rng_seed = r.cell_seed;

  const auto& img = *job.image;
  r.provenance = {
      {"software", kSoftwareVersion},
      {"torch", TORCH_VERSION},
      {"profile", to_string(config.profile)},
      {"global_seed", config.seed},
      {"train", cell_config},
      {"clip_noise", config.clip_noise},
      {"source_size", {img.source_height, img.source_width}},
      {"crop", {img.image.height(), img.image.width()}},
      {"smoothing_init", "first_output"},
  };

  const GridPaths paths = cell_paths(hash, dataset, job.cell);
  try {
    const NoiseSpec spec{job.cell.noise.family, job.cell.noise.intensity, r.noise_seed,
                         config.clip_noise};
    const NoisyObservation observation = make_noisy_observation(img.image, spec);

    IterationObserver observer;
    if (config.dump_intermediates && cell_config.eval_every > 0) {
      observer = [&](const IterationView& view) {
        if (view.iteration % cell_config.eval_every == 0) {
          outcome.intermediates.emplace_back(view.iteration, to_image(view.output));
        }
      };
    }
    TrainResult result = train(img.image, observation, cell_config, observer);
    r.ok = true;
    r.output = result.report.final_output;
    r.smoothed = result.report.final_smoothed;
    r.trajectory = result.report.trajectory;
    r.wall_seconds = result.report.wall_seconds;
    r.provenance["parameter_count"] = result.report.parameter_count;
    r.artifacts = {
        {"output", (paths.image_dir / (paths.stem + ".png")).string()},
        {"smoothed", (paths.image_dir / (paths.stem + "_smoothed.png")).string()},
        {"observation", (paths.image_dir / (paths.observation_stem + ".png")).string()},
        {"truth", (paths.image_dir / "truth.png").string()},
    };
    outcome.observation = observation.lifted;
    outcome.output = result.output.pixels();
    outcome.smoothed = result.smoothed.pixels();
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  return outcome;
}

}  // namespace

GridSummary run_grid(const ExperimentConfig& config) {
  config.validate();
  const std::string hash = config.config_hash();
  const std::string dataset = config.dataset.filename().empty()
                                  ? config.dataset.parent_path().filename().string()
                                  : config.dataset.filename().string();
  const auto images = ingest_dataset(config.dataset, config.glob, config.crop,
                                     1 << config.train.architecture.scales());
  if (images.empty()) throw UsageError("no images matched in " + config.dataset.string());

  fs::create_directories(config.output_dir);
  {
    std::ofstream out(config.output_dir / ("config_" + hash + ".json"), std::ios::trunc);
    ExperimentConfig recorded = config;
    out << json(recorded).dump(2) << '\n';
  }

  std::map<std::string, RunRecord> stored;
  for (auto& r : load_records(config.output_dir)) stored[r.key()] = std::move(r);

  GridSummary summary;
  std::vector<CellJob> jobs;
  std::vector<std::optional<RunRecord>> ordered;
  for (const auto& image : images) {
    for (const auto& noise : config.noise) {
      for (Method method : config.methods) {
        for (int repeat = 0; repeat < config.repeats; ++repeat) {
          Cell cell{image.id, method, noise, repeat};
          RunRecord probe;
          probe.config_hash = hash;
          probe.dataset = dataset;
          probe.cell = cell;
          probe.cell_seed = cell_seed(config.seed, cell);
          const auto found = stored.find(probe.key());
          if (found != stored.end() && found->second.ok) {
            ordered.emplace_back(found->second);
            ++summary.skipped;
          } else {
            jobs.push_back({ordered.size(), &image, cell});
            ordered.emplace_back(std::nullopt);
          }
        }
      }
    }
  }

  std::mutex mutex;
  std::condition_variable ready;
  std::queue<CellOutcome> done;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      CellOutcome outcome = run_cell(config, hash, dataset, jobs[i]);
      std::lock_guard lock(mutex);
      done.push(std::move(outcome));
      ready.notify_one();
    }
  };
  std::vector<std::jthread> pool;
  const int workers = std::min<int>(config.workers, static_cast<int>(jobs.size()));
  for (int i = 0; i < workers; ++i) pool.emplace_back(worker);

  // Single writer: persists each finished cell before waiting for the next.
  std::ofstream runs(config.output_dir / kRunsFile, std::ios::app);
  std::ofstream timings(config.output_dir / kTimingsFile, std::ios::app);
  for (std::size_t finished = 0; finished < jobs.size(); ++finished) {
    CellOutcome outcome;
    {
      std::unique_lock lock(mutex);
      ready.wait(lock, [&] { return !done.empty(); });
      outcome = std::move(done.front());
      done.pop();
    }
    RunRecord& r = outcome.record;
    if (r.ok) {
      const fs::path base = config.output_dir;
      write_image(base / r.artifacts.at("output").get<std::string>(), *outcome.output);
      write_image(base / r.artifacts.at("smoothed").get<std::string>(), *outcome.smoothed);
      const fs::path observation = base / r.artifacts.at("observation").get<std::string>();
      if (!fs::exists(observation)) write_image(observation, *outcome.observation);
      const GridPaths paths = cell_paths(hash, dataset, r.cell);
      for (const auto& [iteration, snapshot] : outcome.intermediates) {
        write_image(base / paths.image_dir /
                        (paths.stem + "_it" + std::to_string(iteration) + ".png"),
                    snapshot);
      }
    } else {
      ++summary.failed;
      std::cerr << "cell " << r.cell.id() << " failed: " << r.error << '\n';
    }
    runs << json(r).dump() << '\n' << std::flush;
    timings << json{{"key", r.key()}, {"wall_seconds", r.wall_seconds}}.dump() << '\n'
            << std::flush;
    ++summary.computed;
    stored[r.key()] = r;
    ordered[outcome.index] = std::move(r);
  }
  pool.clear();
  runs.close();

  // Ground truth crops for the report panels.
  for (const auto& image : images) {
    const fs::path truth = config.output_dir / "recon" / hash / file_token(dataset) /
                           file_token(image.id) / "truth.png";
    if (!fs::exists(truth)) write_image(truth, image.image.pixels());
  }

  write_records(config.output_dir / kRunsFile, stored);
  for (auto& r : ordered) summary.records.push_back(std::move(*r));
  return summary;
}

}  // namespace jdd
