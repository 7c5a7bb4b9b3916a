#include "hfl/exp/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "hfl/errors.hpp"
#include "hfl/exp/stats.hpp"

namespace hfl {

using nlohmann::json;

void SweepSpec::validate() const {
  if (kp.empty()) throw ConfigError("sweep: at least one Kp value required");
  for (std::size_t i = 0; i < kp.size(); ++i) {
    if (!(kp[i] > 0.0)) throw ConfigError("sweep: Kp values must be positive");
    if (i > 0 && !(kp[i] > kp[i - 1])) throw ConfigError("sweep: Kp values must be increasing");
  }
  if (modes.empty()) throw ConfigError("sweep: at least one mode required");
  if (seeds.empty()) throw ConfigError("sweep: repetitions must be >= 1");
  base.validate();
}

SweepSpec parse_sweep(const json& doc, const std::filesystem::path& base_dir) {
  SweepSpec spec;
  try {
    for (const auto& [key, value] : doc.items()) {
      static const std::set<std::string> allowed{"base", "base_config", "kp", "modes", "seeds",
                                                 "repetitions", "steady_start", "threads"};
      if (!allowed.contains(key)) throw ConfigError("sweep: unknown key '" + key + "'");
    }
    if (doc.contains("base_config")) {
      std::filesystem::path p = doc["base_config"].get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      spec.base = load_config(p);
    } else {
      spec.base = parse_config(doc.value("base", json::object()), base_dir);
    }
    spec.kp = doc.at("kp").get<std::vector<double>>();
    if (doc.contains("modes")) {
      spec.modes.clear();
      for (const auto& m : doc["modes"]) spec.modes.push_back(parse_mode(m.get<std::string>()));
    }
    if (doc.contains("seeds")) {
      spec.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
    } else if (doc.contains("repetitions")) {
      const int reps = doc["repetitions"].get<int>();
      if (reps < 1) throw ConfigError("sweep: repetitions must be >= 1");
      spec.seeds.clear();
      for (int i = 0; i < reps; ++i) spec.seeds.push_back(spec.base.seed + static_cast<std::uint64_t>(i));
    }
    spec.steady_start = doc.value("steady_start", spec.steady_start);
    spec.threads = doc.value("threads", spec.threads);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("sweep: ") + e.what());
  }
  spec.validate();
  return spec;
}

SweepSpec load_sweep(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sweep file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_sweep(doc, path.parent_path());
}

ExperimentConfig cell_config(const SweepSpec& spec, double kp, ExecutionMode mode,
                             std::uint64_t seed) {
  ExperimentConfig cfg = spec.base;
  cfg.controller.kp = kp;
  cfg.controller.kd.reset();  // critically damped at every Kp
  cfg.mode = mode;
  cfg.seed = seed;
  return cfg;
}

std::string trace_file_name(double kp, ExecutionMode mode, std::uint64_t seed) {
  return "kp" + format_double(kp) + "_" + to_string(mode) + "_seed" + std::to_string(seed) + ".csv";
}

SummaryRow summarize(double kp, ExecutionMode mode, const std::vector<const SimTrace*>& traces,
                     double steady_start) {
  SummaryRow row;
  row.kp = kp;
  row.mode = mode;
  row.seed_count = static_cast<int>(traces.size());
  std::vector<double> pos;
  std::vector<double> vel;
  int blowups = 0;
  for (const SimTrace* t : traces) {
    const auto p = steady_samples(*t, TraceMetric::kPositionError, steady_start);
    const auto v = steady_samples(*t, TraceMetric::kVelocityError, steady_start);
    pos.insert(pos.end(), p.begin(), p.end());
    vel.insert(vel.end(), v.begin(), v.end());
    if (t->blowup) ++blowups;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto pct = [nan](const std::vector<double>& s, double p) {
    return s.empty() ? nan : percentile(s, p);
  };
  row.pos_err_med = pct(pos, 50.0);
  row.pos_err_p5 = pct(pos, 5.0);
  row.pos_err_p95 = pct(pos, 95.0);
  row.vel_err_med = pct(vel, 50.0);
  row.vel_err_p5 = pct(vel, 5.0);
  row.vel_err_p95 = pct(vel, 95.0);
  row.vel_err_p9 = pct(vel, 9.0);
  row.blowup_frac = traces.empty() ? 0.0 : static_cast<double>(blowups) / traces.size();
  return row;
}

SweepResult run_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  SweepResult result;
  for (double kp : spec.kp) {
    for (ExecutionMode mode : spec.modes) {
      for (std::uint64_t seed : spec.seeds) {
        SweepCell cell;
        cell.kp = kp;
        cell.mode = mode;
        cell.seed = seed;
        if (!out_dir.empty()) cell.trace_file = out_dir / trace_file_name(kp, mode, seed);
        result.cells.push_back(std::move(cell));
      }
    }
  }
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < result.cells.size(); i = next++) {
      SweepCell& cell = result.cells[i];
      try {
        cell.trace = run_experiment(cell_config(spec, cell.kp, cell.mode, cell.seed));
        if (!cell.trace_file.empty()) write_trace_csv(cell.trace, cell.trace_file);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  unsigned threads = spec.threads > 0 ? static_cast<unsigned>(spec.threads)
                                      : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(result.cells.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  const std::size_t per_cell = spec.seeds.size();
  for (std::size_t base = 0; base < result.cells.size(); base += per_cell) {
    std::vector<const SimTrace*> traces;
    for (std::size_t k = 0; k < per_cell; ++k) traces.push_back(&result.cells[base + k].trace);
    result.rows.push_back(summarize(result.cells[base].kp, result.cells[base].mode, traces,
                                    spec.steady_start));
  }
  return result;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out) {
  out << "kp,mode,seed_count,pos_err_med,pos_err_p5,pos_err_p95,vel_err_med,vel_err_p5,"
         "vel_err_p95,vel_err_p9,blowup_frac\n";
  for (const auto& r : rows) {
    out << format_double(r.kp) << ',' << to_string(r.mode) << ',' << r.seed_count;
    for (double v : {r.pos_err_med, r.pos_err_p5, r.pos_err_p95, r.vel_err_med, r.vel_err_p5,
                     r.vel_err_p95, r.vel_err_p9, r.blowup_frac}) {
      out << ',' << format_double(v);
    }
    out << '\n';
  }
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write summary " + path.string());
  write_summary_csv(rows, out);
}

ModeComparison compare_runs(const ExperimentConfig& a, const ExperimentConfig& b,
                            double steady_start) {
  ModeComparison cmp;
  std::thread other([&] { cmp.b = run_experiment(b); });
  cmp.a = run_experiment(a);
  other.join();
  const auto va = steady_samples(cmp.a, TraceMetric::kVelocityError, steady_start);
  const auto vb = steady_samples(cmp.b, TraceMetric::kVelocityError, steady_start);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  cmp.spread_a = va.empty() ? nan : spread(va);
  cmp.spread_b = vb.empty() ? nan : spread(vb);
  cmp.ratio = cmp.spread_b / cmp.spread_a;
  return cmp;
}

ModeComparison compare_modes(const ExperimentConfig& cfg, double kp, double steady_start) {
  ExperimentConfig direct = cfg;
  direct.controller.kp = kp;
  direct.controller.kd.reset();
  direct.mode = ExecutionMode::kDirect;
  ExperimentConfig interp = direct;
  interp.mode = ExecutionMode::kInterpolated;
  return compare_runs(direct, interp, steady_start);
}

void write_comparison_csv(const ModeComparison& cmp, std::ostream& out) {
  out << "t,pos_err_a,vel_err_a,foot_speed_a,pos_err_b,vel_err_b,foot_speed_b\n";
  const std::size_t rows = std::max(cmp.a.rows.size(), cmp.b.rows.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < rows; ++i) {
    const TraceRow* ra = i < cmp.a.rows.size() ? &cmp.a.rows[i] : nullptr;
    const TraceRow* rb = i < cmp.b.rows.size() ? &cmp.b.rows[i] : nullptr;
    out << format_double(ra ? ra->t : rb->t);
    for (const TraceRow* r : {ra, rb}) {
      out << ',' << format_double(r ? r->pos_err : nan) << ','
          << format_double(r ? r->vel_err : nan) << ','
          << format_double(r ? r->pdot.norm() : nan);
    }
    out << '\n';
  }
}

void write_comparison_report(const ModeComparison& cmp, std::ostream& out) {
  out << "velocity-error spread (p95 - p5, m/s)\n"
      << "  run a: " << format_double(cmp.spread_a)
      << (cmp.a.blowup ? "  [blow-up at t = " + format_double(cmp.a.blowup_time) + " s]" : "")
      << '\n'
      << "  run b: " << format_double(cmp.spread_b)
      << (cmp.b.blowup ? "  [blow-up at t = " + format_double(cmp.b.blowup_time) + " s]" : "")
      << '\n'
      << "  ratio b/a: " << format_double(cmp.ratio) << '\n';
}

}  // namespace hfl
