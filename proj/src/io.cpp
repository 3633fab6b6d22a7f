#include "recon/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "recon/errors.hpp"

namespace recon {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double parse_double(const std::string& s, const std::string& where) {
  const std::string t = trim(s);
  try {
    size_t pos = 0;
    const double v = std::stod(t, &pos);
    if (pos != t.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("cannot parse number '" + t + "' in " + where);
  }
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Csv read_csv(const std::string& path) {
  const std::string text = read_file(path);
  Csv csv;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    if (first) {
      csv.header = cells;
      first = false;
    } else {
      csv.rows.push_back(cells);
    }
  }
  if (first) throw ValidationError("empty CSV file '" + path + "'");
  return csv;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

Hierarchy parse_hierarchy_spec(const std::string& text) {
  enum class Section { none, edges, dimensions, bottom, aggregates };
  Section section = Section::none;

  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::string> singletons;
  GroupSpec spec;
  bool has_edges = false, has_groups = false;

  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string line = trim(raw);

    if (line == "[edges]") {
      section = Section::edges;
      has_edges = true;
      continue;
    }
    if (line == "[dimensions]") {
      section = Section::dimensions;
      has_groups = true;
      continue;
    }
    if (line == "[bottom]") {
      section = Section::bottom;
      has_groups = true;
      continue;
    }
    if (line == "[aggregates]") {
      section = Section::aggregates;
      has_groups = true;
      continue;
    }
    if (!line.empty() && line.front() == '[')
      throw ValidationError("unknown section header '" + line + "'");

    if (line.empty()) {
      // inside [aggregates] an empty line is the grand total
      if (section == Section::aggregates) {
        if (std::find(spec.aggregates.begin(), spec.aggregates.end(),
                      std::vector<std::string>{}) == spec.aggregates.end())
          spec.aggregates.push_back({});
      }
      continue;
    }

    switch (section) {
      case Section::none:
        throw ValidationError("content before any section header: '" + line +
                              "'");
      case Section::edges: {
        auto cells = split(line, ',');
        if (cells.size() == 1) {
          singletons.push_back(trim(cells[0]));
        } else if (cells.size() == 2) {
          edges.emplace_back(trim(cells[0]), trim(cells[1]));
        } else {
          throw ValidationError("edge line must be 'parent,child': '" + line +
                                "'");
        }
        break;
      }
      case Section::dimensions: {
        const auto colon = line.find(':');
        if (colon == std::string::npos)
          throw ValidationError("dimension line must be 'name:v1|v2|...': '" +
                                line + "'");
        GroupSpec::Dimension dim;
        dim.name = trim(line.substr(0, colon));
        for (const auto& v : split(line.substr(colon + 1), '|'))
          dim.values.push_back(trim(v));
        if (dim.name.empty() || dim.values.empty())
          throw ValidationError("malformed dimension line: '" + line + "'");
        spec.dimensions.push_back(std::move(dim));
        break;
      }
      case Section::bottom: {
        std::vector<std::string> key;
        for (const auto& v : split(line, ',')) key.push_back(trim(v));
        spec.bottom_keys.push_back(std::move(key));
        break;
      }
      case Section::aggregates: {
        std::vector<std::string> dims;
        for (const auto& v : split(line, '+')) dims.push_back(trim(v));
        if (std::find(spec.aggregates.begin(), spec.aggregates.end(), dims) ==
            spec.aggregates.end())
          spec.aggregates.push_back(std::move(dims));
        break;
      }
    }
  }

  if (has_edges && has_groups)
    throw ValidationError("hierarchy file mixes [edges] and group sections");
  if (has_edges) return build_from_edges(edges, singletons);
  if (has_groups) return build_from_groups(spec);
  throw ValidationError("hierarchy file has no recognized sections");
}

Hierarchy load_hierarchy_file(const std::string& path) {
  return parse_hierarchy_spec(read_file(path));
}

ForecastPanel load_forecast_csv(const std::string& path, const Hierarchy& h) {
  const Csv csv = read_csv(path);
  if (csv.header.empty() || trim(csv.header[0]) != "series")
    throw ValidationError("forecast CSV must start with a 'series' header");
  const int horizons = static_cast<int>(csv.header.size()) - 1;
  if (horizons < 1) throw ValidationError("forecast CSV has no horizon columns");

  std::map<std::string, std::vector<double>> by_label;
  for (const auto& row : csv.rows) {
    if (static_cast<int>(row.size()) != horizons + 1)
      throw ValidationError("forecast CSV row has wrong cell count");
    const std::string label = trim(row[0]);
    if (by_label.count(label))
      throw ValidationError("duplicate series '" + label + "' in forecast CSV");
    std::vector<double> values(horizons);
    for (int c = 0; c < horizons; ++c)
      values[c] = parse_double(row[c + 1], "forecast CSV row '" + label + "'");
    by_label.emplace(label, std::move(values));
  }

  if (static_cast<int>(by_label.size()) != h.n()) {
    for (const auto& entry : by_label) h.index_of(entry.first);  // flags extras
    throw ValidationError("forecast CSV has " +
                          std::to_string(by_label.size()) + " series, hierarchy has " +
                          std::to_string(h.n()));
  }

  ForecastPanel panel;
  panel.labels = h.labels;
  panel.base.resize(h.n(), horizons);
  for (int i = 0; i < h.n(); ++i) {
    auto it = by_label.find(h.labels[i]);
    if (it == by_label.end())
      throw ValidationError("series '" + h.labels[i] +
                            "' missing from forecast CSV");
    for (int c = 0; c < horizons; ++c) panel.base(i, c) = it->second[c];
  }
  return panel;
}

ErrorSample load_errors_csv(const std::string& path, const Hierarchy& h) {
  const Csv csv = read_csv(path);
  if (csv.header.empty() || trim(csv.header[0]) != "series")
    throw ValidationError("error CSV must start with a 'series' header");
  const int t_len = static_cast<int>(csv.header.size()) - 1;
  if (t_len < 1) throw ValidationError("error CSV has no time columns");

  std::map<std::string, std::vector<double>> by_label;
  for (const auto& row : csv.rows) {
    if (static_cast<int>(row.size()) != t_len + 1)
      throw ValidationError("error CSV row has wrong cell count");
    const std::string label = trim(row[0]);
    if (by_label.count(label))
      throw ValidationError("duplicate series '" + label + "' in error CSV");
    std::vector<double> values(t_len);
    for (int c = 0; c < t_len; ++c) {
      const std::string cell = trim(row[c + 1]);
      values[c] = cell.empty()
                      ? std::numeric_limits<double>::quiet_NaN()
                      : parse_double(cell, "error CSV row '" + label + "'");
    }
    by_label.emplace(label, std::move(values));
  }

  ErrorSample sample;
  sample.errors.resize(t_len, h.n());
  for (int i = 0; i < h.n(); ++i) {
    auto it = by_label.find(h.labels[i]);
    if (it == by_label.end())
      throw ValidationError("series '" + h.labels[i] +
                            "' missing from error CSV");
    for (int t = 0; t < t_len; ++t) sample.errors(t, i) = it->second[t];
  }
  return sample;
}

void write_forecast_csv(const std::string& path,
                        const std::vector<std::string>& labels,
                        const Matrix& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file '" + path + "'");
  out << "series";
  for (int c = 0; c < values.cols(); ++c) out << ",h" << (c + 1);
  out << "\n";
  for (int i = 0; i < values.rows(); ++i) {
    out << labels[i];
    for (int c = 0; c < values.cols(); ++c)
      out << "," << format_number(values(i, c));
    out << "\n";
  }
}

void write_table_csv(const std::string& path, const ExperimentTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file '" + path + "'");
  out << "level";
  for (const auto& name : table.col_names) out << "," << name;
  out << "\n";
  for (size_t r = 0; r < table.row_names.size(); ++r) {
    out << table.row_names[r];
    for (int c = 0; c < table.values.cols(); ++c)
      out << "," << format_number(table.values(static_cast<int>(r), c));
    out << "\n";
  }
}

void write_run_log_jsonl(const std::string& path,
                         const std::vector<ReplicationRecord>& log,
                         const std::vector<std::string>& col_names) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file '" + path + "'");
  for (const auto& rec : log) {
    nlohmann::ordered_json j;
    j["replication"] = rec.replication;
    j["seed"] = rec.seed;
    j["ok"] = rec.ok;
    if (rec.ok) {
      nlohmann::ordered_json cells;
      for (size_t c = 0; c < col_names.size() && c < rec.cell_avg_rmse.size();
           ++c)
        cells[col_names[c]] = rec.cell_avg_rmse[c];
      j["avg_rmse"] = std::move(cells);
    } else {
      j["error"] = rec.error;
    }
    out << j.dump() << "\n";
  }
}

void write_diagnostics_json(const std::string& path,
                            const ReconciliationResult& result,
                            const WeightMatrix& wm, const Hierarchy& h) {
  nlohmann::ordered_json j;
  j["coherence_residual"] = result.coherence_residual;
  j["immutability_residual"] = result.immutability_residual;
  j["basis"] = result.diagnostics.basis_labels;
  j["weights"] = to_string(wm.kind);
  if (wm.kind == WeightKind::mint_shrink)
    j["shrink_lambda"] = wm.shrink_lambda;
  if (result.g_matrix.has_value())
    j["gs_residual"] = g_matrix_check(result, h);
  else
    j["gs_residual"] = nullptr;
  std::vector<std::string> warnings = wm.warnings;
  warnings.insert(warnings.end(), result.diagnostics.warnings.begin(),
                  result.diagnostics.warnings.end());
  j["warnings"] = warnings;
  bool any_active = false;
  for (const auto& a : result.diagnostics.active_sets)
    if (!a.empty()) any_active = true;
  if (any_active) j["active_sets"] = result.diagnostics.active_sets;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file '" + path + "'");
  out << j.dump(2) << "\n";
}

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("RECON_LOG");
    if (env == nullptr) return LogLevel::info;
    const std::string v(env);
    if (v == "quiet") return LogLevel::quiet;
    if (v == "debug") return LogLevel::debug;
    return LogLevel::info;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::info) std::cerr << "[info] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::debug) std::cerr << "[debug] " << msg << "\n";
}

void log_warning(const std::string& msg) {
  if (log_level() != LogLevel::quiet) std::cerr << "warning: " << msg << "\n";
}

}  // namespace recon
