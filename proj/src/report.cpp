#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "jdd/errors.hpp"
#include "jdd/experiment.hpp"
#include "jdd/image_io.hpp"

namespace jdd {

namespace fs = std::filesystem;

namespace {

// Row order of the result tables.
int variant_rank(const std::string& variant) {
  static const std::vector<std::string> order{"dip_u", "dip_n", "dm_dm", "ours", "ours_plus"};
  const auto it = std::find(order.begin(), order.end(), variant);
  return static_cast<int>(it - order.begin());
}

std::string variant_title(const std::string& variant) {
  if (variant == "dip_u") return "DIP (u.)";
  if (variant == "dip_n") return "DIP (n.)";
  if (variant == "dm_dm") return "DM-DM";
  if (variant == "ours") return "Ours";
  if (variant == "ours_plus") return "Ours+";
  return variant;
}

struct GroupKey {
  std::string dataset;
  int family;
  double intensity;
  int rank;
  std::string variant;
  auto operator<=>(const GroupKey&) const = default;
};

struct Sample {
  int repeat;
  std::string image;
  MetricResult metric;
};

std::pair<double, double> mean_std(const std::vector<double>& values) {
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

std::string fixed(double v, int digits) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v;
  return out.str();
}

std::string exact(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

}  // namespace

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records) {
  if (records.empty()) throw UsageError("no run records to aggregate");

  std::map<GroupKey, std::vector<Sample>> groups;
  for (const auto& r : records) {
    if (!r.ok) continue;
    const std::string method = to_string(r.cell.method);
    const auto& n = r.cell.noise;
    auto add = [&](const std::string& variant, const MetricResult& metric) {
      GroupKey key{r.dataset, static_cast<int>(n.family), n.intensity, variant_rank(variant),
                   variant};
      groups[key].push_back({r.cell.repeat, r.cell.image_id, metric});
    };
    add(method, r.output);
    if (r.cell.method == Method::ours) add("ours_plus", r.smoothed);
  }

  std::vector<AggregateRow> rows;
  for (const auto& [key, samples] : groups) {
    // Dataset average per repeat, then statistics across repeats.
    std::map<int, std::pair<std::vector<double>, std::vector<double>>> per_repeat;
    std::set<std::string> images;
    for (const auto& s : samples) {
      per_repeat[s.repeat].first.push_back(s.metric.psnr);
      per_repeat[s.repeat].second.push_back(s.metric.ssim);
      images.insert(s.image);
    }
    std::vector<double> psnr;
    std::vector<double> ssim;
    for (const auto& [repeat, values] : per_repeat) {
      psnr.push_back(mean_std(values.first).first);
      ssim.push_back(mean_std(values.second).first);
    }
    AggregateRow row;
    row.dataset = key.dataset;
    row.noise = {static_cast<NoiseFamily>(key.family), key.intensity};
    row.variant = key.variant;
    row.repeats = static_cast<int>(per_repeat.size());
    row.images = static_cast<int>(images.size());
    std::tie(row.psnr_mean, row.psnr_std) = mean_std(psnr);
    std::tie(row.ssim_mean, row.ssim_std) = mean_std(ssim);
    rows.push_back(row);
  }
  if (rows.empty()) throw UsageError("no successful run records to aggregate");
  return rows;
}

namespace {

void write_markdown(const fs::path& file, const std::vector<AggregateRow>& rows,
                    const std::vector<std::pair<fs::path, std::vector<std::string>>>& panels) {
  std::ofstream out(file, std::ios::trunc);
  // (dataset, family) -> table
  std::map<std::pair<std::string, int>, std::vector<const AggregateRow*>> tables;
  for (const auto& row : rows) {
    tables[{row.dataset, static_cast<int>(row.noise.family)}].push_back(&row);
  }
  for (const auto& [key, members] : tables) {
    const auto family = static_cast<NoiseFamily>(key.second);
    const char* symbol = family == NoiseFamily::gaussian ? "sigma" : "lambda";
    std::vector<double> intensities;
    std::vector<std::string> variants;
    for (const auto* row : members) {
      if (std::find(intensities.begin(), intensities.end(), row->noise.intensity) ==
          intensities.end()) {
        intensities.push_back(row->noise.intensity);
      }
      if (std::find(variants.begin(), variants.end(), row->variant) == variants.end()) {
        variants.push_back(row->variant);
      }
    }
    std::sort(intensities.begin(), intensities.end());
    std::sort(variants.begin(), variants.end(), [](const auto& a, const auto& b) {
      return variant_rank(a) < variant_rank(b);
    });

    for (const bool is_psnr : {true, false}) {
      out << "## " << key.first << " / " << to_string(family) << " noise / "
          << (is_psnr ? "PSNR (dB)" : "SSIM") << "\n\n| Method |";
      for (double v : intensities) out << ' ' << symbol << '=' << v << " |";
      out << "\n|---|";
      for (std::size_t i = 0; i < intensities.size(); ++i) out << "---|";
      out << '\n';
      for (const auto& variant : variants) {
        out << "| " << variant_title(variant) << " |";
        for (double v : intensities) {
          const auto it = std::find_if(members.begin(), members.end(), [&](const auto* row) {
            return row->variant == variant && row->noise.intensity == v;
          });
          if (it == members.end()) {
            out << " - |";
          } else if (is_psnr) {
            out << ' ' << fixed((*it)->psnr_mean, 3) << " (" << fixed((*it)->psnr_std, 3) << ") |";
          } else {
            out << ' ' << fixed((*it)->ssim_mean, 3) << " (" << fixed((*it)->ssim_std, 4) << ") |";
          }
        }
        out << '\n';
      }
      out << '\n';
    }
  }
  if (!panels.empty()) {
    out << "## Reconstruction panels\n\n";
    for (const auto& [path, columns] : panels) {
      out << "- `" << path.filename().string() << "`: ";
      for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? " | " : "") << columns[i];
      out << '\n';
    }
  }
}

Image hconcat(const std::vector<Image>& tiles, int gutter) {
  int width = 0;
  int height = 0;
  for (const auto& t : tiles) {
    width += t.width();
    height = std::max(height, t.height());
  }
  width += gutter * static_cast<int>(tiles.size() - 1);
  Image panel(height, width, 3, 1.0);
  int left = 0;
  for (const auto& t : tiles) {
    for (int y = 0; y < t.height(); ++y)
      for (int x = 0; x < t.width(); ++x)
        for (int c = 0; c < 3; ++c) panel.at(y, left + x, c) = t.at(y, x, t.channels() == 3 ? c : 0);
    left += t.width() + gutter;
  }
  return panel;
}

}  // namespace

ReportFiles write_report(const std::vector<RunRecord>& records, const fs::path& output_dir) {
  const auto rows = aggregate(records);
  fs::create_directories(output_dir);
  ReportFiles files;

  files.csv = output_dir / "aggregate.csv";
  {
    std::ofstream out(files.csv, std::ios::trunc);
    out << "dataset,family,intensity,variant,repeats,images,psnr_mean,psnr_std,ssim_mean,ssim_std\n";
    for (const auto& row : rows) {
      out << row.dataset << ',' << to_string(row.noise.family) << ',' << exact(row.noise.intensity)
          << ',' << row.variant << ',' << row.repeats << ',' << row.images << ','
          << exact(row.psnr_mean) << ',' << exact(row.psnr_std) << ',' << exact(row.ssim_mean)
          << ',' << exact(row.ssim_std) << '\n';
    }
  }

  // Panels from the first repeat: truth | observation | each method's output.
  using PanelKey = std::tuple<std::string, std::string, std::string, int, double>;
  std::map<PanelKey, std::vector<const RunRecord*>> by_panel;
  for (const auto& r : records) {
    if (!r.ok || r.cell.repeat != 0 || !r.artifacts.contains("output")) continue;
    by_panel[{r.config_hash, r.dataset, r.cell.image_id, static_cast<int>(r.cell.noise.family),
              r.cell.noise.intensity}]
        .push_back(&r);
  }
  std::vector<std::pair<fs::path, std::vector<std::string>>> panel_columns;
  for (auto& [key, members] : by_panel) {
    std::sort(members.begin(), members.end(), [](const auto* a, const auto* b) {
      return variant_rank(to_string(a->cell.method)) < variant_rank(to_string(b->cell.method));
    });
    const auto* first = members.front();
    const auto artifact = [&](const RunRecord* r, const char* name) {
      return output_dir / r->artifacts.at(name).get<std::string>();
    };
    if (!fs::exists(artifact(first, "truth")) || !fs::exists(artifact(first, "observation"))) {
      continue;
    }
    std::vector<Image> tiles{read_image(artifact(first, "truth")),
                             read_image(artifact(first, "observation"))};
    std::vector<std::string> columns{"truth", "observation"};
    for (const auto* r : members) {
      if (!fs::exists(artifact(r, "output"))) continue;
      tiles.push_back(read_image(artifact(r, "output")));
      columns.push_back(variant_title(to_string(r->cell.method)));
      if (r->cell.method == Method::ours && fs::exists(artifact(r, "smoothed"))) {
        tiles.push_back(read_image(artifact(r, "smoothed")));
        columns.push_back(variant_title("ours_plus"));
      }
    }
    std::string noise = first->cell.noise.label();
    std::replace(noise.begin(), noise.end(), ':', '-');
    const fs::path panel = output_dir / "panels" /
                           (first->dataset + "_" + first->cell.image_id + "_" + noise + "_" +
                            first->config_hash.substr(0, 8) + ".png");
    write_image(panel, hconcat(tiles, 4), 8);
    files.panels.push_back(panel);
    panel_columns.emplace_back(panel, std::move(columns));
  }

  files.markdown = output_dir / "tables.md";
  write_markdown(files.markdown, rows, panel_columns);
  return files;
}

}  // namespace jdd
