#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "dyntrend/core_data.hpp"
#include "dyntrend/error.hpp"
#include "dyntrend/evaluation.hpp"
#include "dyntrend/text.hpp"

namespace dyntrend {

/// Calls fn(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency). If several calls throw, the exception of the lowest index is
/// rethrown, so failures do not depend on scheduling.
template <typename Fn>
void parallel_for_index(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  std::vector<std::exception_ptr> errors(count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
            failed = true;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Per-interval values of one Monte Carlo run.
struct RunSeries {
  std::vector<double> intensity;
  std::vector<double> coverage;

  const std::vector<double>& values(Measure m) const noexcept {
    return m == Measure::coverage ? coverage : intensity;
  }
};

inline RunSeries to_run_series(const AggregateSeries& s) {
  return {std::vector<double>(s.intensity.begin(), s.intensity.end()),
          std::vector<double>(s.coverage.begin(), s.coverage.end())};
}

struct PredictionReport {
  IntervalGrid grid{0.0, 1.0, 1};
  std::vector<double> intensity_mean;
  std::vector<std::optional<double>> intensity_cv;
  std::vector<double> coverage_mean;
  std::vector<std::optional<double>> coverage_cv;
  double duration_fraction = 0.0;  // runs whose measure exceeds theta on every interval
  double theta = 0.0;
  Measure measure = Measure::coverage;
  std::size_t runs = 0;
  std::string model = "da";

  const std::vector<double>& mean(Measure m) const noexcept {
    return m == Measure::coverage ? coverage_mean : intensity_mean;
  }
};

inline PredictionReport summarize_runs(const std::vector<RunSeries>& runs, const IntervalGrid& grid,
                                       double theta, Measure measure) {
  if (runs.empty()) throw ValidationError("need at least one run to summarize");
  PredictionReport r;
  r.grid = grid;
  r.theta = theta;
  r.measure = measure;
  r.runs = runs.size();
  std::vector<double> column(runs.size());
  auto stats = [&](auto pick, std::vector<double>& mean, std::vector<std::optional<double>>& cv) {
    for (std::size_t i = 0; i < grid.count(); ++i) {
      double sum = 0.0;
      for (std::size_t k = 0; k < runs.size(); ++k) {
        column[k] = pick(runs[k])[i];
        sum += column[k];
      }
      mean.push_back(sum / static_cast<double>(runs.size()));
      cv.push_back(coefficient_of_variation(column));
    }
  };
  stats([](const RunSeries& s) -> const std::vector<double>& { return s.intensity; }, r.intensity_mean,
        r.intensity_cv);
  stats([](const RunSeries& s) -> const std::vector<double>& { return s.coverage; }, r.coverage_mean,
        r.coverage_cv);
  std::size_t covering = 0;
  for (const auto& s : runs) {
    covering += longest_run_above(std::span<const double>(s.values(measure)), theta) == grid.count();
  }
  r.duration_fraction = static_cast<double>(covering) / static_cast<double>(runs.size());
  return r;
}

inline std::string cv_text(const std::optional<double>& cv) { return cv ? text::real(*cv) : "NA"; }

inline void write_prediction_csv(std::ostream& out, const PredictionReport& r) {
  out << "interval_index,t_min,t_max,intensity_mean,intensity_cv,coverage_mean,coverage_cv\n";
  for (std::size_t i = 0; i < r.grid.count(); ++i) {
    out << i << ',' << text::real(r.grid.t_min(i)) << ',' << text::real(r.grid.t_max(i)) << ','
        << text::real(r.intensity_mean[i]) << ',' << cv_text(r.intensity_cv[i]) << ','
        << text::real(r.coverage_mean[i]) << ',' << cv_text(r.coverage_cv[i]) << '\n';
  }
  out << "# duration_fraction=" << text::real(r.duration_fraction) << ",theta=" << text::real(r.theta)
      << ",measure=" << to_string(r.measure) << ",runs=" << r.runs << ",model=" << r.model << '\n';
}

inline PredictionReport read_prediction_csv(std::istream& in) {
  PredictionReport r;
  std::vector<double> t_min, t_max;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  bool summary = false;
  auto optional_real = [&](std::string_view s) -> std::optional<double> {
    if (text::trim(s) == "NA") return std::nullopt;
    const auto v = text::parse_real(s);
    if (!v) throw ParseError("bad number '" + std::string(s) + "'", line_no);
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(line);
    if (body.empty()) continue;
    if (!header) {
      if (body != "interval_index,t_min,t_max,intensity_mean,intensity_cv,coverage_mean,coverage_cv") {
        throw ParseError("unexpected prediction CSV header", line_no);
      }
      header = true;
      continue;
    }
    if (body.front() == '#') {
      for (const auto kv : text::split(text::trim(body.substr(1)), ',')) {
        const auto eq = kv.find('=');
        if (eq == std::string_view::npos) continue;
        const auto key = text::trim(kv.substr(0, eq));
        const auto value = text::trim(kv.substr(eq + 1));
        if (key == "duration_fraction") {
          r.duration_fraction = optional_real(value).value_or(0.0);
          summary = true;
        } else if (key == "theta") {
          r.theta = optional_real(value).value_or(0.0);
        } else if (key == "measure") {
          r.measure = parse_measure(value);
        } else if (key == "runs") {
          r.runs = static_cast<std::size_t>(text::parse_int(value).value_or(0));
        } else if (key == "model") {
          r.model = std::string(value);
        }
      }
      continue;
    }
    const auto f = text::split(body, ',');
    if (f.size() != 7) throw ParseError("expected 7 columns", line_no);
    t_min.push_back(optional_real(f[1]).value_or(0.0));
    t_max.push_back(optional_real(f[2]).value_or(0.0));
    r.intensity_mean.push_back(optional_real(f[3]).value_or(0.0));
    r.intensity_cv.push_back(optional_real(f[4]));
    r.coverage_mean.push_back(optional_real(f[5]).value_or(0.0));
    r.coverage_cv.push_back(optional_real(f[6]));
  }
  if (t_min.empty()) throw ValidationError("prediction CSV has no rows");
  if (!summary) throw ValidationError("prediction CSV has no summary line");
  r.grid = IntervalGrid(t_min.front(), t_max.front() - t_min.front(), t_min.size());
  return r;
}

}  // namespace dyntrend
