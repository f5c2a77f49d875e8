#include "v2v/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace v2v {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> split_list(const std::string& key, const std::string& text) {
  std::vector<std::string> out;
  for (auto& item : split(text, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty element in list '" + key + "'");
    out.push_back(item);
  }
  if (out.empty()) throw ConfigError("list '" + key + "' is empty");
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("invalid number in '" + key + "': '" + s + "'");
}

std::uint64_t to_u64(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    if (!s.empty() && s[0] != '-') {
      unsigned long long v = std::stoull(s, &used);
      if (used == s.size()) return v;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("invalid integer in '" + key + "': '" + s + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string u64s(std::uint64_t v) { return std::to_string(v); }

// RunMetrics <-> key/value, shared by the per-run cache files and the rows CSV.
struct MetricField {
  const char* name;
  bool integral;
  double RunMetrics::*real;
  std::uint64_t RunMetrics::*count;
};

const std::vector<MetricField>& metric_fields() {
  static const std::vector<MetricField> table = {
      {"risk_proportion", false, &RunMetrics::risk_proportion, nullptr},
      {"system_aoi_s", false, &RunMetrics::system_aoi_s, nullptr},
      {"total_pps", false, &RunMetrics::total_pps, nullptr},
      {"per_vehicle_pps", false, &RunMetrics::per_vehicle_pps, nullptr},
      {"mean_delay_s", false, &RunMetrics::mean_delay_s, nullptr},
      {"receptions", true, nullptr, &RunMetrics::receptions},
      {"queue_drops", true, nullptr, &RunMetrics::queue_drops},
      {"collision_losses", true, nullptr, &RunMetrics::collision_losses},
      {"communicating_pairs", true, nullptr, &RunMetrics::communicating_pairs},
      {"excluded_pairs", true, nullptr, &RunMetrics::excluded_pairs},
      {"risky_pairs", true, nullptr, &RunMetrics::risky_pairs},
      {"vehicles", true, nullptr, &RunMetrics::vehicles},
  };
  return table;
}

std::string field_text(const RunMetrics& m, const MetricField& f) {
  return f.integral ? u64s(m.*f.count) : fmt(m.*f.real);
}

void set_field(RunMetrics& m, const MetricField& f, const std::string& text) {
  if (f.integral)
    m.*f.count = to_u64(f.name, text);
  else
    m.*f.real = to_double(f.name, text);
}

fs::path cache_path(const std::string& out_dir, const std::string& hash) {
  return fs::path(out_dir) / "runs" / (hash + ".txt");
}

bool load_cached(const fs::path& path, const std::string& hash, RunMetrics& out) {
  std::ifstream in(path);
  if (!in) return false;
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    auto kv = parse_key_value_text(ss.str());
    if (kv["config_hash"] != hash) return false;
    RunMetrics m;
    for (const auto& f : metric_fields()) {
      auto it = kv.find(f.name);
      if (it == kv.end()) return false;
      set_field(m, f, it->second);
    }
    out = m;
    return true;
  } catch (const ConfigError&) {
    return false;
  }
}

void store_cached(const fs::path& path, const SweepCell& cell, const RunMetrics& m) {
  std::ostringstream text;
  std::istringstream config(cell.config.to_key_value_text());
  for (std::string line; std::getline(config, line);) text << "# " << line << '\n';
  text << "config_hash = " << cell.config_hash << '\n';
  for (const auto& f : metric_fields()) text << f.name << " = " << field_text(m, f) << '\n';

  // Write then rename so an interrupted sweep never leaves a torn file.
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << text.str();
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

void write_file(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

bool same_slice(const CellSummary& c, double density, int capacity, QueueDiscipline d) {
  return c.density == density && c.capacity == capacity && c.discipline == d;
}

}  // namespace

void SweepSpec::validate() const {
  if (rates_hz.empty() || densities.empty() || queue_capacities.empty() || disciplines.empty() ||
      seeds.empty())
    throw ConfigError("sweep axes must be non-empty");
  SimConfig probe = apply_overrides(SimConfig{}, base_overrides);
  for (double r : rates_hz)
    if (!(r > 0.0)) throw ConfigError("rates_hz must be > 0");
  for (double d : densities)
    if (!(d > 0.0)) throw ConfigError("densities must be > 0");
  for (int c : queue_capacities)
    if (c < 1) throw ConfigError("queue_capacities must be >= 1");
  probe.validate();
}

std::size_t SweepSpec::run_count() const {
  return rates_hz.size() * densities.size() * queue_capacities.size() * disciplines.size() *
         seeds.size();
}

SweepSpec parse_sweep_spec(const std::string& text) {
  SweepSpec spec;
  for (const auto& [key, value] : parse_key_value_text(text)) {
    if (key == "rates_hz") {
      spec.rates_hz.clear();
      for (const auto& s : split_list(key, value)) spec.rates_hz.push_back(to_double(key, s));
    } else if (key == "densities") {
      spec.densities.clear();
      for (const auto& s : split_list(key, value)) spec.densities.push_back(to_double(key, s));
    } else if (key == "queue_capacities") {
      spec.queue_capacities.clear();
      for (const auto& s : split_list(key, value)) {
        const std::uint64_t c = to_u64(key, s);
        if (c < 1 || c > 1'000'000) throw ConfigError("queue capacity out of range: " + s);
        spec.queue_capacities.push_back(static_cast<int>(c));
      }
    } else if (key == "disciplines") {
      spec.disciplines.clear();
      for (const auto& s : split_list(key, value)) spec.disciplines.push_back(parse_discipline(s));
    } else if (key == "seeds") {
      spec.seeds.clear();
      for (const auto& s : split_list(key, value)) spec.seeds.push_back(to_u64(key, s));
    } else {
      SimConfig probe;
      probe.set(key, value);  // rejects unknown keys early
      spec.base_overrides[key] = value;
    }
  }
  spec.validate();
  return spec;
}

SweepSpec read_sweep_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sweep_spec(ss.str());
}

std::vector<SweepCell> enumerate_cells(const SweepSpec& spec) {
  const SimConfig base = apply_overrides(SimConfig{}, spec.base_overrides);
  std::vector<SweepCell> cells;
  cells.reserve(spec.run_count());
  for (double density : spec.densities)
    for (int capacity : spec.queue_capacities)
      for (QueueDiscipline discipline : spec.disciplines)
        for (double rate : spec.rates_hz)
          for (std::uint64_t seed : spec.seeds) {
            SweepCell c;
            c.density = density;
            c.rate_hz = rate;
            c.capacity = capacity;
            c.discipline = discipline;
            c.seed = seed;
            c.config = base;
            c.config.density_veh_per_km = density;
            c.config.beacon_rate_hz = rate;
            c.config.queue_capacity = capacity;
            c.config.queue_discipline = discipline;
            c.config.seed = seed;
            c.config_hash = c.config.hash();
            cells.push_back(std::move(c));
          }
  return cells;
}

Stat summarize(const std::vector<double>& values) {
  Stat s;
  double sum = 0.0;
  for (double v : values)
    if (std::isfinite(v)) {
      sum += v;
      ++s.n;
    }
  if (s.n == 0) {
    s.mean = s.std = kNaN;
    return s;
  }
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values)
      if (std::isfinite(v)) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

std::size_t SweepResult::failures() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.ok; }));
}

std::vector<CellSummary> aggregate(const std::vector<SweepRow>& rows) {
  struct Acc {
    CellSummary cell;
    std::vector<double> risk, aoi, delay, loss, tput, drops;
  };
  std::vector<Acc> accs;
  for (const auto& r : rows) {
    auto it = std::find_if(accs.begin(), accs.end(), [&](const Acc& a) {
      return same_slice(a.cell, r.density, r.capacity, r.discipline) && a.cell.rate_hz == r.rate_hz;
    });
    if (it == accs.end()) {
      Acc a;
      a.cell.density = r.density;
      a.cell.capacity = r.capacity;
      a.cell.discipline = r.discipline;
      a.cell.rate_hz = r.rate_hz;
      accs.push_back(std::move(a));
      it = accs.end() - 1;
    }
    if (!r.ok) continue;
    ++it->cell.runs;
    const RunMetrics& m = r.metrics;
    it->risk.push_back(m.risk_proportion);
    it->aoi.push_back(m.system_aoi_s);
    it->delay.push_back(m.mean_delay_s);
    it->loss.push_back(static_cast<double>(m.collision_losses));
    it->tput.push_back(m.total_pps);
    it->drops.push_back(static_cast<double>(m.queue_drops));
  }
  std::vector<CellSummary> out;
  out.reserve(accs.size());
  for (auto& a : accs) {
    a.cell.risk = summarize(a.risk);
    a.cell.aoi = summarize(a.aoi);
    a.cell.delay = summarize(a.delay);
    a.cell.collision_loss = summarize(a.loss);
    a.cell.throughput = summarize(a.tput);
    a.cell.queue_drops = summarize(a.drops);
    out.push_back(a.cell);
  }
  return out;
}

SweepResult run_sweep(const SweepSpec& spec, const SweepOptions& options) {
  spec.validate();
  const std::vector<SweepCell> cells = enumerate_cells(spec);
  const bool persist = !options.out_dir.empty();
  if (persist) fs::create_directories(fs::path(options.out_dir) / "runs");

  std::vector<std::size_t> order(cells.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (options.shuffle) std::shuffle(order.begin(), order.end(), std::mt19937_64(0x5eed));

  SweepResult result;
  result.rows.resize(cells.size());
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex progress_mutex;

  auto work = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= order.size()) return;
      const SweepCell& cell = cells[order[k]];
      SweepRow row;
      row.density = cell.density;
      row.rate_hz = cell.rate_hz;
      row.capacity = cell.capacity;
      row.discipline = cell.discipline;
      row.seed = cell.seed;
      row.config_hash = cell.config_hash;
      try {
        const fs::path cached = persist ? cache_path(options.out_dir, cell.config_hash) : fs::path{};
        if (persist && load_cached(cached, cell.config_hash, row.metrics)) {
          row.ok = true;
        } else {
          row.metrics = simulate_and_measure(cell.config);
          row.ok = true;
          if (persist) store_cached(cached, cell, row.metrics);
        }
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = sanitize(e.what());
      }
      result.rows[order[k]] = row;
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        options.progress(++done, cells.size(), row);
      }
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, cells.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  result.summary = aggregate(result.rows);
  if (persist) {
    std::ostringstream rows, summary;
    write_rows_csv(rows, result.rows);
    write_summary_csv(summary, result.summary);
    write_file(fs::path(options.out_dir) / "sweep_rows.csv", rows.str());
    write_file(fs::path(options.out_dir) / "sweep_summary.csv", summary.str());
  }
  return result;
}

void write_rows_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "density,rate_hz,capacity,discipline,seed,config_hash,status";
  for (const auto& f : metric_fields()) out << ',' << f.name;
  out << ",error\n";
  for (const auto& r : rows) {
    out << fmt(r.density) << ',' << fmt(r.rate_hz) << ',' << r.capacity << ','
        << to_string(r.discipline) << ',' << r.seed << ',' << r.config_hash << ','
        << (r.ok ? "ok" : "failed");
    for (const auto& f : metric_fields()) out << ',' << (r.ok ? field_text(r.metrics, f) : "");
    out << ',' << sanitize(r.error) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<CellSummary>& summary) {
  out << "density,capacity,discipline,rate_hz,runs";
  for (const char* name : {"risk_proportion", "system_aoi_s", "mean_delay_s", "collision_losses",
                           "total_pps", "queue_drops"})
    out << ',' << name << "_mean," << name << "_std," << name << "_n";
  out << '\n';
  for (const auto& c : summary) {
    out << fmt(c.density) << ',' << c.capacity << ',' << to_string(c.discipline) << ','
        << fmt(c.rate_hz) << ',' << c.runs;
    for (const Stat* s :
         {&c.risk, &c.aoi, &c.delay, &c.collision_loss, &c.throughput, &c.queue_drops})
      out << ',' << fmt(s->mean) << ',' << fmt(s->std) << ',' << s->n;
    out << '\n';
  }
}

std::vector<SweepRow> read_rows_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("rows CSV is empty");
  const auto header = split(line, ',');
  const std::size_t expected = 7 + metric_fields().size() + 1;
  if (header.size() != expected || header[0] != "density")
    throw std::runtime_error("unexpected rows CSV header");

  std::vector<SweepRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != expected)
      throw std::runtime_error("rows CSV line " + std::to_string(lineno) + ": wrong column count");
    SweepRow r;
    r.density = to_double("density", cols[0]);
    r.rate_hz = to_double("rate_hz", cols[1]);
    r.capacity = static_cast<int>(to_u64("capacity", cols[2]));
    r.discipline = parse_discipline(cols[3]);
    r.seed = to_u64("seed", cols[4]);
    r.config_hash = cols[5];
    r.ok = cols[6] == "ok";
    if (r.ok)
      for (std::size_t i = 0; i < metric_fields().size(); ++i)
        set_field(r.metrics, metric_fields()[i], cols[7 + i]);
    r.error = cols.back();
    rows.push_back(std::move(r));
  }
  return rows;
}

SweepResult load_sweep_result(const std::string& out_dir) {
  const fs::path path = fs::path(out_dir) / "sweep_rows.csv";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  SweepResult result;
  result.rows = read_rows_csv(in);
  result.summary = aggregate(result.rows);
  return result;
}

Metric parse_metric(const std::string& name) {
  if (name == "risk") return Metric::Risk;
  if (name == "aoi") return Metric::Aoi;
  if (name == "delay") return Metric::Delay;
  if (name == "loss" || name == "collision_loss") return Metric::CollisionLoss;
  if (name == "throughput") return Metric::Throughput;
  throw std::invalid_argument("unknown metric '" + name + "'");
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::Risk:
      return "risk";
    case Metric::Aoi:
      return "aoi";
    case Metric::Delay:
      return "delay";
    case Metric::CollisionLoss:
      return "collision_loss";
    case Metric::Throughput:
      return "throughput";
  }
  return "?";
}

std::string metric_column(Metric m) {
  switch (m) {
    case Metric::Risk:
      return "risk_proportion";
    case Metric::Aoi:
      return "system_aoi_s";
    case Metric::Delay:
      return "mean_delay_s";
    case Metric::CollisionLoss:
      return "collision_losses";
    case Metric::Throughput:
      return "total_pps";
  }
  return "?";
}

const Stat& stat_of(const CellSummary& cell, Metric m) {
  switch (m) {
    case Metric::Risk:
      return cell.risk;
    case Metric::Aoi:
      return cell.aoi;
    case Metric::Delay:
      return cell.delay;
    case Metric::CollisionLoss:
      return cell.collision_loss;
    case Metric::Throughput:
      return cell.throughput;
  }
  throw std::logic_error("bad metric");
}

OptimalRate optimal_rate(const SweepResult& result, Metric metric, double density, int capacity,
                         QueueDiscipline discipline) {
  std::vector<double> grid;
  for (const auto& c : result.summary) grid.push_back(c.rate_hz);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const std::string slice = "density=" + fmt(density) + " capacity=" + std::to_string(capacity) +
                            " discipline=" + to_string(discipline);
  OptimalRate out;
  std::vector<std::string> missing;
  for (double rate : grid) {
    auto it = std::find_if(result.summary.begin(), result.summary.end(), [&](const CellSummary& c) {
      return same_slice(c, density, capacity, discipline) && c.rate_hz == rate;
    });
    if (it == result.summary.end() || stat_of(*it, metric).n == 0)
      missing.push_back(slice + " rate_hz=" + fmt(rate));
    else
      out.curve.emplace_back(rate, stat_of(*it, metric));
  }
  if (out.curve.empty()) throw std::invalid_argument("no results for " + slice);
  if (!missing.empty()) {
    std::string msg = "missing cells:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw std::invalid_argument(msg);
  }

  const bool maximize = metric == Metric::Throughput;
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.curve.size(); ++i) {
    const double v = out.curve[i].second.mean;
    const double b = out.curve[best].second.mean;
    if (maximize ? v > b : v < b) best = i;
  }
  out.rate_hz = out.curve[best].first;
  return out;
}

void emit_figure_data(std::ostream& out, const SweepResult& result, Metric metric) {
  out << "metric,density,capacity,discipline,rate_hz,metric_mean,metric_std,n_seeds\n";
  for (const auto& c : result.summary) {
    const Stat& s = stat_of(c, metric);
    out << metric_column(metric) << ',' << fmt(c.density) << ',' << c.capacity << ','
        << to_string(c.discipline) << ',' << fmt(c.rate_hz) << ',' << fmt(s.mean) << ','
        << fmt(s.std) << ',' << s.n << '\n';
  }
}

}  // namespace v2v
