#include "ctrg/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "ctrg/core.hpp"
#include "ctrg/ising.hpp"
#include "ctrg/strip.hpp"
#include "ctrg/trg.hpp"

namespace ctrg::bench {

namespace {

constexpr double kStencilDelta = 1e-3;  // relative beta step for u
constexpr index_t kTorusOracleMaxL = 10;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double median_of(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return (n % 2 == 1) ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

class Timer {
  public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             start_)
            .count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

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

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

struct CellResult {
    double ln_z_density = 0.0;  // lnZ per spin at the probe inverse temperature
    double f = 0.0;
    double u = 0.0;
    index_t steps = 0;
    double max_eps = 0.0;
};

// One full evaluation of a sweep cell (f plus the beta stencil for u).
CellResult evaluate_cell(const RunConfig& cfg, index_t chi, double T,
                         index_t size) {
    core::TruncationPolicy pol{chi, false};
    const double beta = 1.0 / T;
    CellResult out;
    if (cfg.mode == Mode::strip) {
        auto f_at = [&](double b) {
            strip::StripSpec sp{size, 1.0 / b};
            auto method = (cfg.method == Method::ctrg) ? strip::Method::ctrg
                                                       : strip::Method::trg;
            return strip::strip_free_energy(method, sp, pol);
        };
        const double b_lo = beta * (1.0 - kStencilDelta);
        const double b_hi = beta * (1.0 + kStencilDelta);
        out.f = f_at(beta);
        const double bf_lo = b_lo * f_at(b_lo);
        const double bf_hi = b_hi * f_at(b_hi);
        out.u = (bf_hi - bf_lo) / (b_hi - b_lo);
        out.ln_z_density = -beta * out.f;
        return out;
    }
    // torus or thermo-limit cell at a fixed L
    auto lnz_at = [&](double b) -> core::TorusResult {
        ising::ModelSpec m{1.0 / b, ising::Boundary::torus};
        if (cfg.method == Method::ctrg) return core::logZ_torus(m, size, pol);
        core::TorusResult r;
        r.ln_z = trg::logZ_torus_trg(m, size, pol);
        r.steps = 2 * static_cast<index_t>(std::lround(std::log2(size)));
        return r;
    };
    const double n_spins = static_cast<double>(2 * size * size);
    const double b_lo = beta * (1.0 - kStencilDelta);
    const double b_hi = beta * (1.0 + kStencilDelta);
    core::TorusResult mid = lnz_at(beta);
    core::TorusResult lo = lnz_at(b_lo);
    core::TorusResult hi = lnz_at(b_hi);
    auto obs =
        core::observables_from_stencil(T, lo.ln_z, mid.ln_z, hi.ln_z, n_spins,
                                       kStencilDelta);
    out.f = obs.f;
    out.u = obs.u;
    out.ln_z_density = mid.ln_z / n_spins;
    out.steps = mid.steps;
    out.max_eps = std::max(mid.max_eps, std::max(lo.max_eps, hi.max_eps));
    return out;
}

// Thermodynamic-limit cell: grow L by doubling and extract the bulk
// densities from lnZ increments between successive sizes, which cancels the
// torus finite-size terms (sector degeneracy and surface-like 1/L^2
// corrections) instead of waiting for them to decay. Stops once successive
// increment estimates of f agree to conv_tol.
CellResult evaluate_thermo_cell(const RunConfig& cfg, index_t chi, double T,
                                index_t& converged_L) {
    core::TruncationPolicy pol{chi, false};
    const double beta = 1.0 / T;
    const double b_lo = beta * (1.0 - kStencilDelta);
    const double b_hi = beta * (1.0 + kStencilDelta);
    auto lnz_at = [&](double b, index_t L) -> core::TorusResult {
        ising::ModelSpec m{1.0 / b, ising::Boundary::torus};
        if (cfg.method == Method::ctrg) return core::logZ_torus(m, L, pol);
        core::TorusResult r;
        r.ln_z = trg::logZ_torus_trg(m, L, pol);
        r.steps = 2 * static_cast<index_t>(std::lround(std::log2(L)));
        return r;
    };

    CellResult res;
    double prev_f = 0.0;
    bool have_prev = false;
    core::TorusResult prev_mid, prev_lo, prev_hi;
    index_t prev_L = 0;
    index_t L = 8;
    for (; L <= cfg.max_size; L *= 2) {
        core::TorusResult mid = lnz_at(beta, L);
        core::TorusResult lo = lnz_at(b_lo, L);
        core::TorusResult hi = lnz_at(b_hi, L);
        if (prev_L != 0) {
            const double dn = 2.0 * static_cast<double>(L * L - prev_L * prev_L);
            auto obs = core::observables_from_stencil(
                T, lo.ln_z - prev_lo.ln_z, mid.ln_z - prev_mid.ln_z,
                hi.ln_z - prev_hi.ln_z, dn, kStencilDelta);
            res.f = obs.f;
            res.u = obs.u;
            res.ln_z_density = (mid.ln_z - prev_mid.ln_z) / dn;
            res.steps = mid.steps;
            res.max_eps = std::max(mid.max_eps, std::max(lo.max_eps, hi.max_eps));
            if (have_prev && std::abs(res.f - prev_f) < cfg.conv_tol) break;
            prev_f = res.f;
            have_prev = true;
        }
        prev_mid = mid;
        prev_lo = lo;
        prev_hi = hi;
        prev_L = L;
    }
    converged_L = std::min(L, cfg.max_size);
    return res;
}

}  // namespace

std::string method_name(Method m) { return m == Method::ctrg ? "ctrg" : "trg"; }

std::string mode_name(Mode m) {
    switch (m) {
        case Mode::torus: return "torus";
        case Mode::strip: return "strip";
        default: return "thermo-limit";
    }
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    bool have_temps = false;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw argument_error("config line is not key=value: " + t);
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        try {
            if (key == "method") {
                if (val == "ctrg") cfg.method = Method::ctrg;
                else if (val == "trg") cfg.method = Method::trg;
                else throw argument_error("unknown method: " + val);
            } else if (key == "mode") {
                if (val == "torus") cfg.mode = Mode::torus;
                else if (val == "strip") cfg.mode = Mode::strip;
                else if (val == "thermo-limit") cfg.mode = Mode::thermo_limit;
                else throw argument_error("unknown mode: " + val);
            } else if (key == "chi") {
                cfg.chi_list.clear();
                for (const auto& v : split(val, ','))
                    cfg.chi_list.push_back(std::stoll(trim(v)));
            } else if (key == "temps") {
                cfg.temps.clear();
                cfg.temps_relative = false;
                for (const auto& v : split(val, ','))
                    cfg.temps.push_back(std::stod(trim(v)));
            } else if (key == "temps_over_tc") {
                cfg.temps.clear();
                cfg.temps_relative = true;
                for (const auto& v : split(val, ','))
                    cfg.temps.push_back(std::stod(trim(v)));
            } else if (key == "size") {
                cfg.size = std::stoll(val);
            } else if (key == "conv_tol") {
                cfg.conv_tol = std::stod(val);
            } else if (key == "max_size") {
                cfg.max_size = std::stoll(val);
            } else if (key == "chi_ref") {
                cfg.chi_ref = std::stoll(val);
            } else if (key == "out") {
                cfg.out_path = val;
            } else if (key == "deterministic") {
                cfg.deterministic = (val == "1" || val == "true");
            } else if (key == "reps") {
                cfg.reps = std::stoll(val);
            } else {
                throw argument_error("unknown config key: " + key);
            }
        } catch (const std::invalid_argument&) {
            throw argument_error("bad value for " + key + ": " + val);
        } catch (const std::out_of_range&) {
            throw argument_error("bad value for " + key + ": " + val);
        }
    }
    if (cfg.temps.empty()) {
        cfg.temps = {1.0};
        cfg.temps_relative = true;
        have_temps = true;
    }
    (void)have_temps;
    if (cfg.chi_list.empty()) throw argument_error("chi list must be non-empty");
    if (!(cfg.conv_tol > 0.0)) throw argument_error("conv_tol must be positive");
    if (cfg.reps < 1) throw argument_error("reps must be >= 1");
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw argument_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

std::vector<BenchRecord> run_sweep(const RunConfig& cfg) {
    const double tc = ising::critical_temperature();
    std::vector<BenchRecord> records;

    // strip proxy: reference free energies from the largest-chi run
    index_t chi_ref = cfg.chi_ref;
    if (cfg.mode == Mode::strip && chi_ref == 0) {
        index_t max_chi = 0;
        for (index_t c : cfg.chi_list) max_chi = std::max(max_chi, c);
        chi_ref = 4 * max_chi;
    }
    std::map<double, double> strip_ref;

    for (index_t chi : cfg.chi_list) {
        for (double t_in : cfg.temps) {
            const double T = cfg.temps_relative ? t_in * tc : t_in;
            BenchRecord rec;
            rec.method = method_name(cfg.method);
            rec.mode = mode_name(cfg.mode);
            rec.chi = chi;
            rec.T_over_Tc = T / tc;

            CellResult cell;
            index_t thermo_L = cfg.size;
            std::vector<double> times;
            for (index_t rep = 0; rep < cfg.reps; ++rep) {
                Timer timer;
                if (cfg.mode == Mode::thermo_limit) {
                    cell = evaluate_thermo_cell(cfg, chi, T, thermo_L);
                } else {
                    cell = evaluate_cell(cfg, chi, T, cfg.size);
                }
                times.push_back(timer.seconds());
            }
            rec.L = (cfg.mode == Mode::thermo_limit) ? thermo_L : cfg.size;
            rec.lnZ = cell.ln_z_density;
            rec.f = cell.f;
            rec.u = cell.u;
            rec.steps = cell.steps;
            rec.max_eps = cell.max_eps;
            rec.wall_seconds = median_of(times);

            if (cfg.mode == Mode::thermo_limit) {
                const double f_ref = ising::onsager_free_energy_density(T);
                const double u_ref = ising::onsager_internal_energy_density(T);
                rec.err_f = std::abs(rec.f - f_ref) / std::abs(f_ref);
                if (u_ref != 0.0)
                    rec.err_u = std::abs(rec.u - u_ref) / std::abs(u_ref);
            } else if (cfg.mode == Mode::strip) {
                auto it = strip_ref.find(T);
                if (it == strip_ref.end()) {
                    core::TruncationPolicy ref_pol{chi_ref, false};
                    const double f_ref = strip::strip_free_energy(
                        strip::Method::ctrg, {cfg.size, T}, ref_pol);
                    it = strip_ref.emplace(T, f_ref).first;
                }
                rec.err_f = std::abs(rec.f - it->second) / std::abs(it->second);
            } else {
                if (cfg.size <= kTorusOracleMaxL) {
                    const double n_spins = static_cast<double>(2 * cfg.size * cfg.size);
                    const double beta = 1.0 / T;
                    auto oracle_lnz = [&](double b) {
                        ising::ModelSpec mm{1.0 / b, ising::Boundary::torus};
                        return ising::exact_network_logZ(
                            ising::plaquette_tensor(mm), cfg.size);
                    };
                    const double z_mid = oracle_lnz(beta);
                    const double z_lo = oracle_lnz(beta * (1.0 - kStencilDelta));
                    const double z_hi = oracle_lnz(beta * (1.0 + kStencilDelta));
                    auto obs = core::observables_from_stencil(
                        T, z_lo, z_mid, z_hi, n_spins, kStencilDelta);
                    rec.err_f = std::abs(rec.f - obs.f) / std::abs(obs.f);
                    if (obs.u != 0.0)
                        rec.err_u = std::abs(rec.u - obs.u) / std::abs(obs.u);
                } else {
                    std::cerr << "warning: no torus oracle for L = " << cfg.size
                              << "; error columns left blank\n";
                }
            }
            records.push_back(std::move(rec));
        }
    }

    if (!cfg.out_path.empty()) {
        std::ofstream out(cfg.out_path);
        if (!out) throw argument_error("cannot open output file: " + cfg.out_path);
        write_csv(out, cfg, records);
    }
    return records;
}

void write_csv(std::ostream& os, const RunConfig& cfg,
               const std::vector<BenchRecord>& records) {
    os << "# config: method=" << method_name(cfg.method)
       << " mode=" << mode_name(cfg.mode) << " size=" << cfg.size
       << " reps=" << cfg.reps << " deterministic=" << (cfg.deterministic ? 1 : 0)
       << "\n";
    if (cfg.mode == Mode::thermo_limit)
        os << "# oracle: closed-form infinite-lattice solution (quadrature, "
              "tol 1e-12); err columns relative\n";
    else if (cfg.mode == Mode::strip)
        os << "# oracle: ctrg proxy at chi_ref="
           << (cfg.chi_ref != 0 ? cfg.chi_ref : [&] {
                  index_t m = 0;
                  for (index_t c : cfg.chi_list) m = std::max(m, c);
                  return 4 * m;
              }())
           << "; err_f relative to proxy\n";
    else
        os << "# oracle: exact torus contraction (transfer product), L <= "
           << kTorusOracleMaxL << "; err columns relative\n";
    os << "method,mode,L,chi,T_over_Tc,lnZ,f,u,err_f,err_u,steps,max_eps,"
          "wall_seconds\n";
    for (const auto& r : records) {
        os << r.method << ',' << r.mode << ',' << r.L << ',' << r.chi << ','
           << format_double(r.T_over_Tc) << ',' << format_double(r.lnZ) << ','
           << format_double(r.f) << ',' << format_double(r.u) << ','
           << (r.err_f ? format_double(*r.err_f) : "") << ','
           << (r.err_u ? format_double(*r.err_u) : "") << ',' << r.steps << ','
           << format_double(r.max_eps) << ',' << format_double(r.wall_seconds)
           << "\n";
    }
}

std::vector<BenchRecord> read_csv(std::istream& is) {
    std::vector<BenchRecord> records;
    std::string line;
    bool saw_header = false;
    while (std::getline(is, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (!saw_header) {
            if (t != "method,mode,L,chi,T_over_Tc,lnZ,f,u,err_f,err_u,steps,"
                     "max_eps,wall_seconds")
                throw argument_error("unexpected CSV header: " + t);
            saw_header = true;
            continue;
        }
        const auto cells = split(t, ',');
        if (cells.size() != 13) throw argument_error("bad CSV row: " + t);
        BenchRecord r;
        r.method = cells[0];
        r.mode = cells[1];
        r.L = std::stoll(cells[2]);
        r.chi = std::stoll(cells[3]);
        r.T_over_Tc = std::stod(cells[4]);
        r.lnZ = std::stod(cells[5]);
        r.f = std::stod(cells[6]);
        r.u = std::stod(cells[7]);
        if (!cells[8].empty()) r.err_f = std::stod(cells[8]);
        if (!cells[9].empty()) r.err_u = std::stod(cells[9]);
        r.steps = std::stoll(cells[10]);
        r.max_eps = std::stod(cells[11]);
        r.wall_seconds = std::stod(cells[12]);
        records.push_back(std::move(r));
    }
    if (!saw_header) throw argument_error("CSV header not found");
    return records;
}

PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw argument_error("need at least 3 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : points) {
        if (!(x > 0.0) || !(y > 0.0))
            throw argument_error("power-law fit needs positive values");
        const double lx = std::log(x), ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(points.size());
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-30) throw argument_error("degenerate abscissae");
    PowerLawFit fit;
    fit.exponent = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - fit.exponent * sx) / n;
    fit.prefactor = std::exp(intercept);
    double ss = 0.0;
    for (const auto& [x, y] : points) {
        const double resid = std::log(y) - (intercept + fit.exponent * std::log(x));
        ss += resid * resid;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

}  // namespace ctrg::bench
