#ifndef CTRG_BENCH_HPP
#define CTRG_BENCH_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ctrg/tensor.hpp"

namespace ctrg::bench {

enum class Method { ctrg, trg };
enum class Mode { torus, strip, thermo_limit };

// One benchmark sweep: a grid of (chi, T) cells for one method and mode.
struct RunConfig {
    Method method = Method::ctrg;
    Mode mode = Mode::thermo_limit;
    std::vector<index_t> chi_list = {16};
    std::vector<double> temps;          // absolute temperatures
    bool temps_relative = false;        // temps given as multiples of T_c
    index_t size = 32;                  // torus L or strip width
    double conv_tol = 1e-8;             // thermo-limit |df| stop criterion
    index_t max_size = 512;             // thermo-limit cap on L
    index_t chi_ref = 0;                // strip proxy bond dimension (0: 4x max chi)
    std::string out_path;               // empty: no CSV file
    bool deterministic = true;
    index_t reps = 1;                   // timing repetitions (median reported)
};

struct BenchRecord {
    std::string method;
    std::string mode;
    index_t L = 0;
    index_t chi = 0;
    double T_over_Tc = 0.0;
    double lnZ = 0.0;
    double f = 0.0;
    double u = 0.0;
    std::optional<double> err_f;
    std::optional<double> err_u;
    index_t steps = 0;
    double max_eps = 0.0;
    double wall_seconds = 0.0;
};

// Parses a flat key=value config file; unknown keys are errors.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// Runs every (chi, T) cell of the sweep, computing error columns against the
// declared oracle (thermodynamic limit: closed-form solution; strip: the
// chi_ref proxy run; torus: exact contraction when the size allows it).
// Writes CSV to cfg.out_path when set.
std::vector<BenchRecord> run_sweep(const RunConfig& cfg);

void write_csv(std::ostream& os, const RunConfig& cfg,
               const std::vector<BenchRecord>& records);
std::vector<BenchRecord> read_csv(std::istream& is);

struct PowerLawFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    double residual = 0.0;  // RMS deviation in log-log coordinates
};

// Least-squares fit of y = prefactor * x^exponent in log-log coordinates.
PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points);

std::string method_name(Method m);
std::string mode_name(Mode m);

}  // namespace ctrg::bench

#endif
