#include "rkhsid/stability.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "rkhsid/rng.hpp"

namespace rkhsid::stability {

using kernels::IRKernelSpec;
using kernels::KernelSpec;

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::stable: return "stable";
        case Verdict::unstable: return "unstable";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

namespace {

// sum_{k=1..P} (2k-1) alpha^k: the double sum of alpha^max(i,j) over the
// leading P-by-P block, grouped by max(i,j) = k.
double ss_partial_sum(double alpha, int P) {
    double s = 0.0;
    double a = alpha;
    for (int k = 1; k <= P; ++k, a *= alpha) s += (2.0 * k - 1.0) * a;
    return s;
}

// tail sum_{k>P} (2k-1) alpha^k in closed form
double ss_tail(double alpha, int P) {
    const double ap1 = std::pow(alpha, P + 1);
    const double one = 1.0 - alpha;
    return 2.0 * ap1 * ((P + 1.0) - P * alpha) / (one * one) - ap1 / one;
}

// partial double sum of a radial generator h(|i-j|) over the P-by-P block
double radial_partial_sum(const IRKernelSpec& K, int P) {
    double s = P * std::abs(K.entry(0, 0));
    for (int d = 1; d < P; ++d) s += 2.0 * (P - d) * std::abs(K.entry(0, d));
    return s;
}

// probe mass T_P(a) = sum_i |sum_j K(i,j) a_j| for a sign vector a
double probe_mass(const IRKernelSpec& K, const std::vector<double>& a, int P) {
    double total = 0.0;
    for (int i = 0; i < P; ++i) {
        double row = 0.0;
        for (int j = 0; j < P; ++j) row += K.entry(i, j) * a[static_cast<std::size_t>(j)];
        total += std::abs(row);
    }
    return total;
}

StabilityVerdict stable_with_sum(double partial, double tail, int P, const std::string& rule) {
    StabilityVerdict v;
    v.verdict = Verdict::stable;
    v.rule = rule;
    v.evidence.partial_sum = partial;
    v.evidence.tail_bound = tail;
    v.evidence.total = partial + tail;
    v.evidence.truncation = P;
    return v;
}

}  // namespace

StabilityVerdict summability_test(const IRKernelSpec& K, int P, int probes,
                                  std::uint64_t rng_seed) {
    if (P < 1) throw Error("summability truncation must be >= 1");
    K.validate();

    switch (K.family) {
        case IRKernelSpec::Family::stable_spline_discrete:
            return stable_with_sum(ss_partial_sum(K.alpha, P), ss_tail(K.alpha, P), P,
                                   "absolutely summable kernel with geometric tail bound");
        case IRKernelSpec::Family::diagonal_ss: {
            const double partial = K.alpha * (1.0 - std::pow(K.alpha, P)) / (1.0 - K.alpha);
            const double tail = std::pow(K.alpha, P + 1) / (1.0 - K.alpha);
            return stable_with_sum(partial, tail, P,
                                   "absolutely summable kernel with geometric tail bound");
        }
        case IRKernelSpec::Family::stable_spline_ct: {
            // integral over [0,T]^2 of exp(-beta max), T = P, plus analytic tail to 2/beta^2
            const double T = static_cast<double>(P);
            const double b = K.beta;
            const double partial = 2.0 * (1.0 - std::exp(-b * T) * (1.0 + b * T)) / (b * b);
            const double tail = 2.0 / (b * b) - partial;
            return stable_with_sum(partial, tail, P,
                                   "absolutely integrable kernel (continuous time)");
        }
        case IRKernelSpec::Family::explicit_matrix: {
            const double sum = K.matrix.cwiseAbs().sum();
            return stable_with_sum(sum, 0.0, static_cast<int>(K.matrix.rows()),
                                   "finite support: absolutely summable");
        }
        case IRKernelSpec::Family::radial_discrete: {
            StabilityVerdict v;
            v.evidence.truncation = P;
            v.evidence.partial_sum = radial_partial_sum(K, P);
            v.evidence.probe_growth = {radial_partial_sum(K, P), radial_partial_sum(K, 2 * P),
                                       radial_partial_sum(K, 4 * P)};
            if (K.nonnegative_valued()) {
                // every row sum is >= h(0) = 1, so the double sum grows at
                // least linearly in P: summability fails, and for
                // nonnegative-valued kernels it is also necessary
                v.verdict = Verdict::unstable;
                v.rule = "nonnegative-kernel necessity: row sums bounded below, sum diverges";
                return v;
            }
            // sign-indefinite: random sign probes for the l-infinity condition
            Rng rng(rng_seed);
            v.evidence.probes = probes;
            double max_probe = 0.0;
            bool diverging = false;
            for (int q = 0; q < probes; ++q) {
                std::vector<double> a(static_cast<std::size_t>(4 * P));
                for (double& s : a) s = rng.uniform() < 0.5 ? -1.0 : 1.0;
                const double t1 = probe_mass(K, a, P);
                const double t2 = probe_mass(K, a, 2 * P);
                const double t4 = probe_mass(K, a, 4 * P);
                if (t4 > max_probe) {
                    max_probe = t4;
                    v.evidence.probe_growth = {t1, t2, t4};
                }
                // sustained superlinear growth across two doublings:
                // a concretely diverging probe
                if (t1 > 0.0 && t2 > 0.0 && t2 / t1 > 1.8 && t4 / t2 > 1.8) diverging = true;
            }
            v.evidence.max_probe_value = max_probe;
            if (diverging) {
                v.verdict = Verdict::unstable;
                v.rule = "diverging bounded-input probe";
            } else {
                v.verdict = Verdict::inconclusive;
                v.rule = "no analytic bound; probes did not diverge";
            }
            return v;
        }
    }
    throw Error("unhandled IR kernel family");
}

namespace {

// full double sum of |K| when the generator is absolutely summable
bool generator_abs_sum(const IRKernelSpec& gen, double* out) {
    const StabilityVerdict v = summability_test(gen, 400);
    if (v.verdict != Verdict::stable) return false;
    *out = v.evidence.total;
    return true;
}

// analytic sup of K(x,x) over the infinity-norm ball of radius r, when the
// family admits one
bool analytic_diagonal_bound(const KernelSpec& k, double r, double* out) {
    switch (k.family) {
        case KernelSpec::Family::gaussian:
        case KernelSpec::Family::laplacian:
            *out = k.scale;  // K(x,x) = exp(0)
            return true;
        case KernelSpec::Family::nss: {
            const double a = k.alpha;
            const double full = a * (1.0 + a) / ((1.0 - a) * (1.0 - a));
            *out = k.scale * r * r * full;
            return true;
        }
        case KernelSpec::Family::linear_fir:
            *out = k.scale * r * r * k.fir_matrix.cwiseAbs().sum();
            return true;
        case KernelSpec::Family::linear_iir:
        case KernelSpec::Family::linear_ct: {
            double s = 0.0;
            if (!generator_abs_sum(k.generator, &s)) return false;
            *out = k.scale * r * r * s;
            return true;
        }
        case KernelSpec::Family::sum: {
            double l = 0.0, rr = 0.0;
            if (!analytic_diagonal_bound(*k.left, r, &l) ||
                !analytic_diagonal_bound(*k.right, r, &rr))
                return false;
            *out = k.scale * (l + rr);
            return true;
        }
        case KernelSpec::Family::product: {
            double l = 0.0, rr = 0.0;
            if (!analytic_diagonal_bound(*k.left, r, &l) ||
                !analytic_diagonal_bound(*k.right, r, &rr))
                return false;
            *out = k.scale * l * rr;
            return true;
        }
    }
    return false;
}

int sampling_dimension(const KernelSpec& k) {
    switch (k.family) {
        case KernelSpec::Family::linear_fir: return static_cast<int>(k.fir_matrix.rows());
        case KernelSpec::Family::linear_iir:
        case KernelSpec::Family::nss: return k.truncation;
        case KernelSpec::Family::linear_ct: return static_cast<int>(k.quad_grid.size());
        case KernelSpec::Family::sum:
        case KernelSpec::Family::product: {
            const int l = sampling_dimension(*k.left);
            return l > 0 ? l : sampling_dimension(*k.right);
        }
        default: return 8;
    }
}

InputLocation random_ball_location(const KernelSpec& k, int dim, double r, Rng& rng) {
    InputLocation loc;
    if (k.family == KernelSpec::Family::linear_ct) {
        loc.kind = InputLocation::Kind::sampled_trajectory;
        loc.grid = k.quad_grid;
    } else {
        loc.kind = InputLocation::Kind::truncated_infinite;
    }
    loc.values.resize(static_cast<std::size_t>(dim));
    for (double& v : loc.values) v = rng.uniform(-r, r);
    return loc;
}

}  // namespace

StabilityVerdict diagonal_bound_test(const KernelSpec& kernel, const std::vector<double>& radii,
                                     int samples_per_radius, std::uint64_t rng_seed) {
    kernel.validate();
    if (radii.empty()) throw Error("diagonal bound test needs at least one radius");

    StabilityVerdict v;
    v.evidence.radii = radii;
    const int dim = sampling_dimension(kernel);

    bool analytic_ok = true;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        double bound = std::numeric_limits<double>::quiet_NaN();
        if (!analytic_diagonal_bound(kernel, radii[i], &bound)) analytic_ok = false;
        v.evidence.diagonal_bound.push_back(bound);

        Rng rng(derive_seed(rng_seed, i));
        double sup = 0.0;
        for (int s = 0; s < samples_per_radius; ++s) {
            const InputLocation loc = random_ball_location(kernel, dim, radii[i], rng);
            sup = std::max(sup, kernels::eval(kernel, loc, loc));
        }
        v.evidence.empirical_sup.push_back(sup);
    }

    if (analytic_ok) {
        v.verdict = Verdict::stable;
        v.rule = "bounded kernel diagonal on infinity-norm balls";
    } else {
        v.verdict = Verdict::inconclusive;
        v.rule = "no analytic diagonal bound; empirical sup reported as evidence";
    }
    return v;
}

StabilityVerdict composed_stability(const KernelSpec& kernel) {
    kernel.validate();
    using Family = KernelSpec::Family;

    switch (kernel.family) {
        case Family::gaussian:
        case Family::laplacian:
        case Family::nss:
        case Family::linear_fir:
            return diagonal_bound_test(kernel, {1.0}, 16);
        case Family::linear_iir:
        case Family::linear_ct: {
            const StabilityVerdict gen = summability_test(kernel.generator, 400);
            StabilityVerdict v = gen;
            if (gen.verdict == Verdict::stable)
                v.rule = "linear kernel with absolutely summable generator";
            else if (gen.verdict == Verdict::unstable)
                v.rule = "linear kernel with non-summable nonnegative generator";
            return v;
        }
        case Family::sum:
        case Family::product: {
            const StabilityVerdict l = composed_stability(*kernel.left);
            const StabilityVerdict r = composed_stability(*kernel.right);
            StabilityVerdict v;
            if (l.verdict == Verdict::stable && r.verdict == Verdict::stable) {
                v.verdict = Verdict::stable;
                v.rule = "sum/product of stable kernels";
            } else {
                v.verdict = Verdict::inconclusive;
                v.rule = std::string("operands ") + to_string(l.verdict) + "/" +
                         to_string(r.verdict) + "; composition rules give no converse";
            }
            v.evidence.note = l.rule + " | " + r.rule;
            return v;
        }
    }
    throw Error("unhandled kernel family");
}

double sign_probe_bound(const IRKernelSpec& K, const std::vector<double>& theta, int P) {
    K.validate();
    const std::size_t n = std::min<std::size_t>(theta.size(), static_cast<std::size_t>(P));
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sign = theta[i] > 0.0 ? 1.0 : (theta[i] < 0.0 ? -1.0 : 0.0);
        s += theta[i] * sign;
    }
    return s;
}

std::string to_json_string(const StabilityVerdict& v, int indent) {
    nlohmann::json j;
    j["verdict"] = to_string(v.verdict);
    j["rule"] = v.rule;
    nlohmann::json e;
    auto put = [&e](const char* key, double val) {
        if (std::isfinite(val)) e[key] = val;
    };
    put("partial_sum", v.evidence.partial_sum);
    put("tail_bound", v.evidence.tail_bound);
    put("total", v.evidence.total);
    put("max_probe_value", v.evidence.max_probe_value);
    if (v.evidence.truncation > 0) e["truncation"] = v.evidence.truncation;
    if (v.evidence.probes > 0) e["probes"] = v.evidence.probes;
    if (!v.evidence.probe_growth.empty()) e["probe_growth"] = v.evidence.probe_growth;
    if (!v.evidence.radii.empty()) {
        e["radii"] = v.evidence.radii;
        e["diagonal_bound"] = v.evidence.diagonal_bound;
        e["empirical_sup"] = v.evidence.empirical_sup;
    }
    if (!v.evidence.note.empty()) e["note"] = v.evidence.note;
    j["evidence"] = std::move(e);
    return j.dump(indent);
}

}  // namespace rkhsid::stability
