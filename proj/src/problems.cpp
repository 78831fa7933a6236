#include "physcal/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "physcal/error.hpp"

namespace physcal {

bool ProblemSpec::contains(const DesignPoint& x) const {
    if (x.size() != dim) return false;
    for (int d = 0; d < dim; ++d) {
        if (!(x[d] >= lower[d] && x[d] <= upper[d])) return false;
    }
    return true;
}

Eigen::MatrixXd ProblemSpec::from_unit(const Eigen::MatrixXd& unit) const {
    require(unit.rows() == dim, "from_unit: dimension mismatch");
    Eigen::MatrixXd out = (upper - lower).asDiagonal() * unit;
    out.colwise() += lower;
    return out;
}

// ---------------------------------------------------------------------------
// Latin hypercubes

Eigen::MatrixXd random_lhd(int n, int D, Rng& rng) {
    require(n >= 1 && D >= 1, "random_lhd: n and D must be positive");
    Eigen::MatrixXd out(D, n);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int d = 0; d < D; ++d) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int i = 0; i < n; ++i) out(d, i) = (perm[static_cast<std::size_t>(i)] + unif(rng)) / n;
    }
    return out;
}

double min_pairwise_distance(const Eigen::MatrixXd& points) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
        for (Eigen::Index i = j + 1; i < points.cols(); ++i) {
            best = std::min(best, (points.col(i) - points.col(j)).squaredNorm());
        }
    }
    return std::sqrt(best);
}

namespace {

// Morris-Mitchell phi_p; smaller is more spread out. Used to break ties
// between swaps that leave the minimum distance unchanged.
double phi_p(const Eigen::MatrixXd& pts, double p = 50.0) {
    const double dmin = min_pairwise_distance(pts);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
        for (Eigen::Index i = j + 1; i < pts.cols(); ++i) {
            const double d = (pts.col(i) - pts.col(j)).norm();
            acc += std::pow(dmin / std::max(d, 1e-300), p);
        }
    }
    return std::pow(acc, 1.0 / p) / dmin;
}

}  // namespace

Eigen::MatrixXd maximin_lhd(int n, int D, std::uint64_t seed, int restarts) {
    require(n >= 2, "maximin_lhd needs n >= 2");
    require(D >= 1, "maximin_lhd needs D >= 1");
    require(restarts >= 1, "maximin_lhd needs at least one restart");
    Rng rng(seed);
    Eigen::MatrixXd best;
    double best_dist = -1.0;
    std::uniform_int_distribution<int> pick_dim(0, D - 1);
    std::uniform_int_distribution<int> pick_row(0, n - 1);
    const int swaps = 20 * n;
    for (int r = 0; r < restarts; ++r) {
        Eigen::MatrixXd pts = random_lhd(n, D, rng);
        double dist = min_pairwise_distance(pts);
        double phi = phi_p(pts);
        for (int s = 0; s < swaps; ++s) {
            const int d = pick_dim(rng);
            const int i = pick_row(rng);
            const int j = pick_row(rng);
            if (i == j) continue;
            std::swap(pts(d, i), pts(d, j));
            const double nd = min_pairwise_distance(pts);
            const double nphi = nd >= dist ? phi_p(pts) : phi;
            if (nd > dist || (nd == dist && nphi < phi)) {
                dist = nd;
                phi = nphi;
            } else {
                std::swap(pts(d, i), pts(d, j));
            }
        }
        if (dist > best_dist) {
            best_dist = dist;
            best = pts;
        }
    }
    return best;
}

bool is_latin_hypercube(const Eigen::MatrixXd& unit_points) {
    const Eigen::Index n = unit_points.cols();
    for (Eigen::Index d = 0; d < unit_points.rows(); ++d) {
        std::vector<int> hits(static_cast<std::size_t>(n), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double v = unit_points(d, i);
            if (!(v >= 0.0 && v <= 1.0)) return false;
            const auto s = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(v * n)), n - 1);
            ++hits[static_cast<std::size_t>(s)];
        }
        if (std::any_of(hits.begin(), hits.end(), [](int h) { return h != 1; })) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// 2-D benchmark

namespace {

double bump_sum(const std::vector<Bump>& bumps, const DesignPoint& x) {
    double acc = 0.0;
    for (const Bump& b : bumps) {
        const double u = (x[0] - b.center[0]) / b.width[0];
        const double v = (x[1] - b.center[1]) / b.width[1];
        acc += b.amplitude * std::exp(-0.5 * (u * u + v * v));
    }
    return acc;
}

// Committed result of calibrate_benchmark_2d(kCanonicalBenchmarkSeed).
constexpr double kCanonicalConstraintAmplitude = 1.526953125;

double function_range(const std::function<double(const DesignPoint&)>& fn, int side) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    DesignPoint x(2);
    for (int i = 0; i < side; ++i) {
        for (int j = 0; j < side; ++j) {
            x << (i + 0.5) / side, (j + 0.5) / side;
            const double v = fn(x);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    return hi - lo;
}

}  // namespace

Benchmark2dShape benchmark_2d_shape(std::uint64_t seed) {
    Benchmark2dShape shape;
    if (seed == kCanonicalBenchmarkSeed) {
        shape.target = {
            {1.0, {0.25, 0.70}, {0.15, 0.25}},
            {0.8, {0.70, 0.30}, {0.20, 0.12}},
            {-0.6, {0.55, 0.60}, {0.10, 0.30}},
        };
        shape.constraint = {
            {0.9, {0.95, 0.85}, {0.30, 0.35}},
            {0.25, {0.05, 0.95}, {0.18, 0.15}},
        };
        shape.constraint_slope = {0.15, 0.10};
        return shape;
    }
    Rng rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto in = [&](double a, double b) { return a + (b - a) * u01(rng); };
    for (int k = 0; k < 3; ++k) {
        shape.target.push_back({in(-0.8, 1.0), {in(0.1, 0.9), in(0.1, 0.9)}, {in(0.1, 0.3), in(0.1, 0.3)}});
    }
    // One dominant constraint bump near a corner keeps the failure region in one piece.
    const double cx = u01(rng) < 0.5 ? in(0.8, 1.0) : in(0.0, 0.2);
    const double cy = u01(rng) < 0.5 ? in(0.8, 1.0) : in(0.0, 0.2);
    shape.constraint.push_back({0.9, {cx, cy}, {in(0.25, 0.35), in(0.25, 0.35)}});
    shape.constraint.push_back({in(0.1, 0.35), {in(0.2, 0.8), in(0.2, 0.8)}, {in(0.12, 0.2), in(0.12, 0.2)}});
    shape.constraint_slope = {in(0.0, 0.15), in(0.0, 0.15)};
    return shape;
}

ProblemSpec benchmark_2d_from_shape(const Benchmark2dShape& shape, double constraint_amplitude, double xi,
                                    double target_ratio) {
    ProblemSpec spec;
    spec.name = "benchmark_2d";
    spec.dim = 2;
    spec.lower = Eigen::VectorXd::Zero(2);
    spec.upper = Eigen::VectorXd::Ones(2);
    spec.xi = xi;
    spec.intended_failure_ratio = target_ratio;
    spec.target = [target = shape.target](const DesignPoint& x) { return bump_sum(target, x); };
    spec.constraint = [c = shape.constraint, slope = shape.constraint_slope,
                       a = constraint_amplitude](const DesignPoint& x) {
        return a * (bump_sum(c, x) + slope[0] * x[0] + slope[1] * x[1]);
    };
    return spec;
}

CalibrationResult calibrate_scale(const std::function<ProblemSpec(double)>& make, double lo, double hi,
                                  double target, double tolerance, int grid_size) {
    CalibrationResult res;
    double r_lo = failure_ratio_estimate(make(lo), grid_size);
    double r_hi = failure_ratio_estimate(make(hi), grid_size);
    if (!(r_lo <= target && r_hi >= target)) {
        std::ostringstream os;
        os << "calibration bracket [" << lo << ", " << hi << "] gives failure ratios [" << r_lo << ", " << r_hi
           << "], which does not contain the target " << target;
        throw ConfigError(os.str());
    }
    for (res.iterations = 1; res.iterations <= 200; ++res.iterations) {
        const double mid = 0.5 * (lo + hi);
        const double r = failure_ratio_estimate(make(mid), grid_size);
        res.amplitude = mid;
        res.failure_ratio = r;
        if (std::abs(r - target) <= tolerance) break;
        if (r < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (std::abs(res.failure_ratio - target) > tolerance) {
        std::ostringstream os;
        os << "calibration stalled at ratio " << res.failure_ratio << " (target " << target << " +- "
           << tolerance << ")";
        throw ConfigError(os.str());
    }
    return res;
}

CalibrationResult calibrate_benchmark_2d(std::uint64_t seed) {
    const Benchmark2dShape shape = benchmark_2d_shape(seed);
    auto make = [&shape](double a) { return benchmark_2d_from_shape(shape, a); };
    CalibrationResult res = calibrate_scale(make, 0.05, 10.0, 0.28, 0.002, 10000);
    res.connected = safe_pixels_connected(make(res.amplitude), 100) && failure_components(make(res.amplitude), 100) == 1;
    if (!res.connected) throw ConfigError("calibrated benchmark has isolated safe pixels or a split failure region");
    return res;
}

ProblemSpec make_benchmark_2d(std::uint64_t seed) {
    if (seed == kCanonicalBenchmarkSeed) {
        ProblemSpec spec = benchmark_2d_from_shape(benchmark_2d_shape(seed), kCanonicalConstraintAmplitude);
        spec.noise_f = 0.01 * function_range(spec.target, 100);
        spec.noise_h = 0.01 * function_range(spec.constraint, 100);
        return spec;
    }
    const CalibrationResult cal = calibrate_benchmark_2d(seed);
    ProblemSpec spec = benchmark_2d_from_shape(benchmark_2d_shape(seed), cal.amplitude);
    spec.name = "benchmark_2d_seed" + std::to_string(seed);
    spec.noise_f = 0.01 * function_range(spec.target, 100);
    spec.noise_h = 0.01 * function_range(spec.constraint, 100);
    return spec;
}

bool safe_pixels_connected(const ProblemSpec& spec, int side) {
    require(spec.dim == 2, "connectivity scan needs a 2-D problem");
    std::vector<char> safe(static_cast<std::size_t>(side * side));
    DesignPoint x(2);
    for (int i = 0; i < side; ++i) {
        for (int j = 0; j < side; ++j) {
            x << spec.lower[0] + (i + 0.5) / side * (spec.upper[0] - spec.lower[0]),
                spec.lower[1] + (j + 0.5) / side * (spec.upper[1] - spec.lower[1]);
            safe[static_cast<std::size_t>(i * side + j)] = spec.truly_safe(x);
        }
    }
    auto at = [&](int i, int j) {
        return i >= 0 && j >= 0 && i < side && j < side && safe[static_cast<std::size_t>(i * side + j)];
    };
    for (int i = 0; i < side; ++i) {
        for (int j = 0; j < side; ++j) {
            if (!at(i, j)) continue;
            if (!(at(i - 1, j) || at(i + 1, j) || at(i, j - 1) || at(i, j + 1))) return false;
        }
    }
    return true;
}

int failure_components(const ProblemSpec& spec, int side) {
    require(spec.dim == 2, "connectivity scan needs a 2-D problem");
    std::vector<int> label(static_cast<std::size_t>(side * side), -1);
    DesignPoint x(2);
    for (int i = 0; i < side; ++i) {
        for (int j = 0; j < side; ++j) {
            x << spec.lower[0] + (i + 0.5) / side * (spec.upper[0] - spec.lower[0]),
                spec.lower[1] + (j + 0.5) / side * (spec.upper[1] - spec.lower[1]);
            if (!spec.truly_safe(x)) label[static_cast<std::size_t>(i * side + j)] = 0;
        }
    }
    int components = 0;
    std::vector<std::pair<int, int>> stack;
    for (int i = 0; i < side; ++i) {
        for (int j = 0; j < side; ++j) {
            if (label[static_cast<std::size_t>(i * side + j)] != 0) continue;
            ++components;
            stack.push_back({i, j});
            label[static_cast<std::size_t>(i * side + j)] = components;
            while (!stack.empty()) {
                const auto [a, b] = stack.back();
                stack.pop_back();
                for (const auto& [da, db] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
                    const int u = a + da, v = b + db;
                    if (u < 0 || v < 0 || u >= side || v >= side) continue;
                    int& l = label[static_cast<std::size_t>(u * side + v)];
                    if (l != 0) continue;
                    l = components;
                    stack.push_back({u, v});
                }
            }
        }
    }
    return components;
}

// ---------------------------------------------------------------------------
// 1-D convergence problem

ProblemSpec make_convergence_1d() {
    ProblemSpec spec;
    spec.name = "convergence_1d";
    spec.dim = 1;
    spec.lower = Eigen::VectorXd::Zero(1);
    spec.upper = Eigen::VectorXd::Ones(1);
    spec.xi = 0.7;
    spec.target = [](const DesignPoint& x) { return 0.8 * std::sin(2.0 * M_PI * x[0]) + 0.3 * x[0]; };
    spec.constraint = [](const DesignPoint& x) {
        const double u = (x[0] - 0.55) / 0.15;
        return 0.2 + 0.55 * std::exp(-0.5 * u * u);
    };
    spec.intended_failure_ratio = 2.0 * 0.15 * std::sqrt(2.0 * std::log(0.55 / 0.5));
    return spec;
}

// ---------------------------------------------------------------------------
// 10-D actuator analogue

namespace {

// Committed result of calibrating the stress scale to a ~8% failure ratio at
// margin of safety 1.25.
constexpr double kFuselageStressScale = 1.119970703125;
constexpr int kFuselageDim = 10;

struct FuselageCoefficients {
    Eigen::VectorXd s1, s2, t12, lin, quad, wave;
};

FuselageCoefficients fuselage_coefficients() {
    FuselageCoefficients c;
    c.s1.resize(kFuselageDim);
    c.s2.resize(kFuselageDim);
    c.t12.resize(kFuselageDim);
    c.lin.resize(kFuselageDim);
    c.quad.resize(kFuselageDim);
    c.wave.resize(kFuselageDim);
    for (int i = 0; i < kFuselageDim; ++i) {
        // actuators equispaced around the rim; the critical element sits at the bottom
        const double angle = 2.0 * M_PI * (i + 0.5) / kFuselageDim;
        const double near = std::exp(-0.5 * std::pow((angle - M_PI) / 0.7, 2));
        c.s1[i] = 60.0 + 140.0 * near;
        c.s2[i] = 2.0 + 9.0 * near;
        c.t12[i] = 6.0 * std::sin(angle) + 3.0 * near;
        c.lin[i] = std::cos(angle);
        c.quad[i] = 0.5 * std::sin(2.0 * angle);
        c.wave[i] = 0.3 + 0.2 * std::cos(3.0 * angle);
    }
    return c;
}

}  // namespace

ProblemSpec fuselage_from_scale(double stress_scale, double margin_of_safety) {
    require(margin_of_safety >= 1.0, "margin of safety must be at least 1");
    require(stress_scale > 0.0, "stress scale must be positive");
    const FuselageCoefficients c = fuselage_coefficients();
    const TsaiWuStrengths strengths{1500.0, 1200.0, 50.0, 250.0, 70.0};
    ProblemSpec spec;
    spec.name = margin_of_safety == 1.25 ? "fuselage_10d" : "fuselage_10d_ms" + std::to_string(margin_of_safety);
    spec.dim = kFuselageDim;
    spec.lower = Eigen::VectorXd::Zero(kFuselageDim);
    spec.upper = Eigen::VectorXd::Ones(kFuselageDim);
    spec.xi = acceptance_threshold(margin_of_safety);
    spec.target = [c](const DesignPoint& x) {
        const double q = c.quad.dot(x);
        return 0.4 * c.lin.dot(x) + 0.6 * q * q + 0.3 * std::sin(M_PI * c.wave.dot(x));
    };
    spec.constraint = [c, strengths, s = stress_scale](const DesignPoint& x) {
        return tsai_wu(s * c.s1.dot(x), s * c.s2.dot(x), s * c.t12.dot(x), strengths);
    };
    spec.intended_failure_ratio = 0.08;
    spec.noise_f = 0.0;
    spec.noise_h = 0.0;
    return spec;
}

ProblemSpec make_fuselage_analogue(double margin_of_safety) {
    return fuselage_from_scale(kFuselageStressScale, margin_of_safety);
}

CalibrationResult calibrate_fuselage() {
    const auto make = [](double scale) { return fuselage_from_scale(scale, 1.25); };
    return calibrate_scale(make, 0.1, 10.0, 0.08, 0.002, 20000);
}

ProblemSpec make_problem(const std::string& name) {
    if (name == "benchmark_2d") return make_benchmark_2d();
    if (name == "convergence_1d") return make_convergence_1d();
    if (name == "fuselage_10d") return make_fuselage_analogue(1.25);
    if (name == "fuselage_10d_ms150") return make_fuselage_analogue(1.5);
    throw ConfigError("unknown problem '" + name + "'");
}

std::vector<std::string> problem_names() {
    return {"benchmark_2d", "convergence_1d", "fuselage_10d", "fuselage_10d_ms150"};
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd reference_points(const ProblemSpec& spec, int grid_size) {
    require(grid_size >= 1000, "reference grid needs at least 1000 points");
    Eigen::MatrixXd unit;
    if (spec.dim == 1) {
        unit.resize(1, grid_size);
        for (int i = 0; i < grid_size; ++i) unit(0, i) = (i + 0.5) / grid_size;
    } else if (spec.dim == 2) {
        const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(grid_size))));
        unit.resize(2, side * side);
        for (int i = 0; i < side; ++i) {
            for (int j = 0; j < side; ++j) {
                unit(0, i * side + j) = (i + 0.5) / side;
                unit(1, i * side + j) = (j + 0.5) / side;
            }
        }
    } else {
        Rng rng(0x5eed5eedULL);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        unit.resize(spec.dim, grid_size);
        for (int i = 0; i < grid_size; ++i) {
            for (int d = 0; d < spec.dim; ++d) unit(d, i) = u01(rng);
        }
    }
    return spec.from_unit(unit);
}

double failure_ratio_estimate(const ProblemSpec& spec, int grid_size) {
    const Eigen::MatrixXd pts = reference_points(spec, grid_size);
    Eigen::Index failures = 0;
    for (Eigen::Index i = 0; i < pts.cols(); ++i) {
        if (spec.constraint(pts.col(i)) >= spec.xi) ++failures;
    }
    return static_cast<double>(failures) / static_cast<double>(pts.cols());
}

Observation oracle_observe(const ProblemSpec& spec, const DesignPoint& x, Rng& rng) {
    if (!spec.contains(x)) throw InvalidInput("oracle_observe: point outside the design space");
    const double f = spec.target(x);
    const double h = spec.constraint(x);
    Observation o;
    o.y = f;
    o.z = h;
    if (spec.noise_f > 0.0) o.y += std::normal_distribution<double>(0.0, spec.noise_f)(rng);
    if (spec.noise_h > 0.0) o.z += std::normal_distribution<double>(0.0, spec.noise_h)(rng);
    o.true_safe = h < spec.xi;
    return o;
}

// ---------------------------------------------------------------------------

void TsaiWuStrengths::validate() const {
    require(sigma1T > 0.0 && sigma1C > 0.0 && sigma2T > 0.0 && sigma2C > 0.0 && tau12F > 0.0,
            "Tsai-Wu strengths must be strictly positive");
}

double tsai_wu(double sigma1, double sigma2, double tau12, const TsaiWuStrengths& s) {
    s.validate();
    const double shear = tau12 / s.tau12F;
    return (1.0 / s.sigma1T - 1.0 / s.sigma1C) * sigma1 + (1.0 / s.sigma2T - 1.0 / s.sigma2C) * sigma2 +
           sigma1 * sigma1 / (s.sigma1T * s.sigma1C) + sigma2 * sigma2 / (s.sigma2T * s.sigma2C) + shear * shear -
           sigma1 * sigma2 / (s.sigma1T * s.sigma1C * s.sigma2T * s.sigma2C);
}

double acceptance_threshold(double margin_of_safety) {
    require(margin_of_safety > 0.0, "margin of safety must be positive");
    return 1.0 / margin_of_safety;
}

}  // namespace physcal
