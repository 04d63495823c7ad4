#include "vrplab/scaling.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

namespace vrplab {

namespace fs = std::filesystem;

power_law_fit fit_power_law(const std::vector<double>& x,
                            const std::vector<double>& gap) {
  if (x.size() != gap.size())
    throw std::invalid_argument("fit: x and gap sizes differ");
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("fit: need at least 2 points");

  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0))
      throw std::invalid_argument("fit: x values must be positive");
    if (!(gap[i] > 0.0))
      throw std::invalid_argument("fit: gap values must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(gap[i]);
  }

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = lx[i] - mx, dy = ly[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0.0)
    throw std::invalid_argument("fit: need at least 2 distinct x values");

  const double slope = sxy / sxx;
  const double b = my - slope * mx;

  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (slope * lx[i] + b);
    ss_res += r * r;
  }

  power_law_fit fit;
  fit.exponent = -slope;
  fit.intercept = std::exp(b);
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.n_points = static_cast<int>(n);
  return fit;
}

double predict_gap(const power_law_fit& fit, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("predict: x must be positive");
  return fit.intercept * std::pow(x, -fit.exponent);
}

std::vector<series_point> read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,gap,label")
    throw std::runtime_error(path + ": expected header \"x,gap,label\", got \"" +
                             line + "\"");
  std::vector<series_point> points;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string xs, gs, label;
    if (!std::getline(ss, xs, ',') || !std::getline(ss, gs, ',') ||
        !std::getline(ss, label))
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 3 comma-separated fields");
    series_point p;
    try {
      std::size_t used = 0;
      p.x = std::stod(xs, &used);
      if (used != xs.size()) throw std::invalid_argument(xs);
      p.gap = std::stod(gs, &used);
      if (used != gs.size()) throw std::invalid_argument(gs);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": bad numeric field");
    }
    p.label = label;
    points.push_back(std::move(p));
  }
  if (points.empty()) throw std::runtime_error(path + ": no data rows");
  return points;
}

std::vector<power_law_fit> fit_all(const std::vector<series_point>& points) {
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>
      by_label;
  for (const series_point& p : points) {
    auto it = by_label.find(p.label);
    if (it == by_label.end()) {
      order.push_back(p.label);
      it = by_label.emplace(p.label, std::make_pair(std::vector<double>{},
                                                    std::vector<double>{}))
               .first;
    }
    it->second.first.push_back(p.x);
    it->second.second.push_back(p.gap);
  }
  std::vector<power_law_fit> fits;
  fits.reserve(order.size());
  for (const std::string& label : order) {
    const auto& [xs, gs] = by_label.at(label);
    power_law_fit f;
    try {
      f = fit_power_law(xs, gs);
    } catch (const std::exception& e) {
      throw std::runtime_error("series \"" + label + "\": " + e.what());
    }
    f.label = label;
    fits.push_back(std::move(f));
  }
  return fits;
}

double mean_exponent(const std::vector<power_law_fit>& fits) {
  if (fits.empty()) throw std::invalid_argument("mean_exponent: no fits");
  double s = 0.0;
  for (const power_law_fit& f : fits) s += f.exponent;
  return s / static_cast<double>(fits.size());
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

std::ofstream open_out(const std::string& path) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path);
  return out;
}

}  // namespace

void write_fits_csv(const std::vector<power_law_fit>& fits,
                    const std::string& law, const std::string& path) {
  std::ofstream out = open_out(path);
  out << kFitsCsvHeader << "\n";
  for (const power_law_fit& f : fits)
    out << f.label << ',' << law << ',' << fmt(f.exponent) << ','
        << fmt(f.intercept) << ',' << fmt(f.r_squared) << ',' << f.n_points
        << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_plot_csv(const std::vector<series_point>& points,
                    const std::vector<power_law_fit>& fits,
                    const std::string& path) {
  std::map<std::string, const power_law_fit*> by_label;
  for (const power_law_fit& f : fits) by_label[f.label] = &f;
  std::ofstream out = open_out(path);
  out << "label,x,gap,fit\n";
  for (const series_point& p : points) {
    auto it = by_label.find(p.label);
    if (it == by_label.end())
      throw std::runtime_error("plot: no fit for label \"" + p.label + "\"");
    out << p.label << ',' << fmt(p.x) << ',' << fmt(p.gap) << ','
        << fmt(predict_gap(*it->second, p.x)) << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace vrplab
