#include "recon/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "recon/errors.hpp"
#include "recon/linalg.hpp"

namespace recon {

namespace {

constexpr double kParamFloor = 0.001;
constexpr double kParamCeil = 0.999;

double clamp_param(double x) {
  return std::min(kParamCeil, std::max(kParamFloor, x));
}

struct SesRun {
  double sse = 0.0;
  double level = 0.0;
  std::vector<double> errors;
};

SesRun run_ses(const std::vector<double>& y, double alpha, bool keep_errors) {
  SesRun run;
  run.level = y[0];
  if (keep_errors) run.errors.reserve(y.size() - 1);
  for (size_t t = 1; t < y.size(); ++t) {
    const double e = y[t] - run.level;
    run.sse += e * e;
    if (keep_errors) run.errors.push_back(e);
    run.level += alpha * e;
  }
  return run;
}

struct HwRun {
  double sse = 0.0;
  double level = 0.0;
  double trend = 0.0;
  std::vector<double> seasonal;
  std::vector<double> errors;
};

HwRun run_holt_winters(const std::vector<double>& y, int l, double alpha,
                       double beta, double gamma, bool keep_errors) {
  const int t_total = static_cast<int>(y.size());
  HwRun run;
  // level = mean of the first season; trend = average first-difference
  // across the first two seasons; seasonal = detrended first-season values.
  double m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < l; ++i) {
    m1 += y[i];
    m2 += y[l + i];
  }
  m1 /= l;
  m2 /= l;
  run.level = m1;
  run.trend = (m2 - m1) / l;
  run.seasonal.resize(l);
  for (int i = 0; i < l; ++i) run.seasonal[i] = y[i] - m1;

  if (keep_errors) run.errors.reserve(t_total - l);
  for (int t = l; t < t_total; ++t) {
    const int si = t % l;
    const double pred = run.level + run.trend + run.seasonal[si];
    const double e = y[t] - pred;
    run.sse += e * e;
    if (keep_errors) run.errors.push_back(e);
    const double new_level =
        alpha * (y[t] - run.seasonal[si]) + (1.0 - alpha) * (run.level + run.trend);
    run.trend = beta * (new_level - run.level) + (1.0 - beta) * run.trend;
    run.seasonal[si] =
        gamma * (y[t] - new_level) + (1.0 - gamma) * run.seasonal[si];
    run.level = new_level;
  }
  return run;
}

SeriesModel fit_ses(const std::vector<double>& y) {
  if (y.size() < 3) throw ValidationError("series too short for ses (need >= 3)");
  double best_alpha = kParamFloor;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 99; ++i) {
    const double alpha = i / 100.0;
    const double sse = run_ses(y, alpha, false).sse;
    if (sse < best_sse) {
      best_sse = sse;
      best_alpha = alpha;
    }
  }
  for (int i = -9; i <= 9; ++i) {
    const double alpha = clamp_param(best_alpha + i / 1000.0);
    const double sse = run_ses(y, alpha, false).sse;
    if (sse < best_sse) {
      best_sse = sse;
      best_alpha = alpha;
    }
  }
  SesRun run = run_ses(y, best_alpha, true);

  SeriesModel model;
  model.kind = ModelKind::ses;
  model.params = {best_alpha};
  model.level = run.level;
  model.train_length = static_cast<int>(y.size());
  model.insample_errors = std::move(run.errors);
  return model;
}

SeriesModel fit_holt_winters(const std::vector<double>& y, int l) {
  if (l < 2) throw ValidationError("holt_winters needs season_length >= 2");
  if (static_cast<int>(y.size()) < 2 * l)
    throw ValidationError("series too short for holt_winters (need >= 2 * " +
                          std::to_string(l) + ")");

  const std::vector<double> alphas{0.05, 0.15, 0.25, 0.35, 0.45,
                                   0.55, 0.65, 0.75, 0.85, 0.95};
  const std::vector<double> betas{0.01, 0.05, 0.1, 0.2, 0.3};
  const std::vector<double> gammas = alphas;

  double ba = 0.3, bb = 0.05, bg = 0.3;
  double best_sse = std::numeric_limits<double>::infinity();
  for (double a : alphas)
    for (double b : betas)
      for (double g : gammas) {
        const double sse = run_holt_winters(y, l, a, b, g, false).sse;
        if (sse < best_sse) {
          best_sse = sse;
          ba = a;
          bb = b;
          bg = g;
        }
      }
  // two local refinement passes, shrinking the step each time
  double step = 0.05;
  for (int pass = 0; pass < 2; ++pass) {
    for (int da = -2; da <= 2; ++da)
      for (int db = -2; db <= 2; ++db)
        for (int dg = -2; dg <= 2; ++dg) {
          const double a = clamp_param(ba + da * step);
          const double b = clamp_param(bb + db * step);
          const double g = clamp_param(bg + dg * step);
          const double sse = run_holt_winters(y, l, a, b, g, false).sse;
          if (sse < best_sse) {
            best_sse = sse;
            ba = a;
            bb = b;
            bg = g;
          }
        }
    step /= 5.0;
  }

  HwRun run = run_holt_winters(y, l, ba, bb, bg, true);
  SeriesModel model;
  model.kind = ModelKind::holt_winters_additive;
  model.params = {ba, bb, bg};
  model.season_length = l;
  model.level = run.level;
  model.trend = run.trend;
  model.seasonal = std::move(run.seasonal);
  model.train_length = static_cast<int>(y.size());
  model.insample_errors = std::move(run.errors);
  return model;
}

// Spectral radius of the AR companion matrix; >= 1 means non-stationary.
double companion_radius(const std::vector<double>& phi) {
  const int p = static_cast<int>(phi.size());
  if (p == 0) return 0.0;
  Matrix c = Matrix::Zero(p, p);
  for (int j = 0; j < p; ++j) c(0, j) = phi[j];
  for (int i = 1; i < p; ++i) c(i, i - 1) = 1.0;
  Eigen::EigenSolver<Matrix> es(c, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

SeriesModel fit_ar(const std::vector<double>& y) {
  const int t_total = static_cast<int>(y.size());
  if (t_total < 2) throw ValidationError("series too short for ar (need >= 2)");

  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= t_total;
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  if (ss <= 1e-12 * t_total * (1.0 + mean * mean)) {
    SeriesModel model = fit_ses(y);
    model.warnings.push_back("constant series: ar fell back to ses");
    return model;
  }

  const int p_max = std::min(3, t_total - 2);
  int best_p = 0;
  double best_aic = std::numeric_limits<double>::infinity();
  Vector best_coef;

  for (int p = 0; p <= p_max; ++p) {
    const int rows = t_total - p;
    Matrix design(rows, p + 1);
    Vector target(rows);
    for (int t = p; t < t_total; ++t) {
      design(t - p, 0) = 1.0;
      for (int j = 1; j <= p; ++j) design(t - p, j) = y[t - j];
      target(t - p) = y[t];
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < p + 1) continue;
    const Vector coef = qr.solve(target);
    const double rss = (target - design * coef).squaredNorm();
    if (rss <= 0.0) {
      best_p = p;
      best_coef = coef;
      break;
    }
    const double aic = rows * std::log(rss / rows) + 2.0 * (p + 1);
    if (aic < best_aic) {
      best_aic = aic;
      best_p = p;
      best_coef = coef;
    }
  }
  if (best_coef.size() == 0) {
    SeriesModel model = fit_ses(y);
    model.warnings.push_back("degenerate regression: ar fell back to ses");
    return model;
  }

  SeriesModel model;
  model.kind = ModelKind::ar;
  model.params.assign(best_coef.data(), best_coef.data() + best_coef.size());
  model.train_length = t_total;
  model.tail.assign(y.end() - best_p, y.end());

  model.insample_errors.reserve(t_total - best_p);
  for (int t = best_p; t < t_total; ++t) {
    double pred = model.params[0];
    for (int j = 1; j <= best_p; ++j) pred += model.params[j] * y[t - j];
    model.insample_errors.push_back(y[t] - pred);
  }

  std::vector<double> phi(model.params.begin() + 1, model.params.end());
  if (companion_radius(phi) >= 1.0 - 1e-9)
    model.warnings.push_back("ar roots on or inside the unit circle");
  return model;
}

}  // namespace

SeriesModel fit(ModelKind kind, const std::vector<double>& series,
                int season_length) {
  for (double v : series)
    if (!std::isfinite(v))
      throw ValidationError("series contains non-finite values");
  switch (kind) {
    case ModelKind::ses: return fit_ses(series);
    case ModelKind::holt_winters_additive:
      return fit_holt_winters(series, season_length);
    case ModelKind::ar: return fit_ar(series);
  }
  throw ValidationError("unknown model kind");
}

std::vector<double> predict(const SeriesModel& model, int horizon) {
  std::vector<double> out;
  out.reserve(horizon);
  switch (model.kind) {
    case ModelKind::ses:
      out.assign(horizon, model.level);
      break;
    case ModelKind::holt_winters_additive: {
      const int l = model.season_length;
      for (int h = 1; h <= horizon; ++h)
        out.push_back(model.level + h * model.trend +
                      model.seasonal[(model.train_length + h - 1) % l]);
      break;
    }
    case ModelKind::ar: {
      const int p = static_cast<int>(model.tail.size());
      std::vector<double> hist = model.tail;
      for (int h = 0; h < horizon; ++h) {
        double pred = model.params[0];
        for (int j = 1; j <= p; ++j) pred += model.params[j] * hist[p - j];
        out.push_back(pred);
        if (p > 0) {
          hist.erase(hist.begin());
          hist.push_back(pred);
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace recon
