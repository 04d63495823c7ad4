#pragma once
#include <string>
#include <vector>

// Power-law fits gap(x) ~= A * x^(-a) via ordinary least squares on
// (ln x, ln gap). Series files are CSV with header "x,gap,label"; one fit is
// produced per label.

namespace vrplab {

struct power_law_fit {
  std::string label;
  double exponent = 0.0;   // a (negated log-log slope)
  double intercept = 0.0;  // A
  double r_squared = 0.0;  // coefficient of determination in log space
  int n_points = 0;
};

// throws on size mismatch, n < 2, nonpositive values, or < 2 distinct x
power_law_fit fit_power_law(const std::vector<double>& x,
                            const std::vector<double>& gap);

double predict_gap(const power_law_fit& fit, double x);

struct series_point {
  double x = 0.0;
  double gap = 0.0;
  std::string label;
};

std::vector<series_point> read_series_csv(const std::string& path);

// one fit per label, labels in first-appearance order
std::vector<power_law_fit> fit_all(const std::vector<series_point>& points);

double mean_exponent(const std::vector<power_law_fit>& fits);

inline constexpr const char* kFitsCsvHeader =
    "label,law,exponent,intercept,r_squared,n_points";

void write_fits_csv(const std::vector<power_law_fit>& fits,
                    const std::string& law, const std::string& path);

// long-form "label,x,gap,fit" rows for plotting observed vs fitted values
void write_plot_csv(const std::vector<series_point>& points,
                    const std::vector<power_law_fit>& fits,
                    const std::string& path);

}  // namespace vrplab
