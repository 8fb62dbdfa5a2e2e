#include "dimenet/bessel.hpp"

#include <cmath>
#include <stdexcept>

namespace dimenet {

void BasisConfig::validate() const {
    check(cutoff > 0.0, "BasisConfig: cutoff must be > 0");
    check(n_rbf >= 1 && n_srbf >= 1 && n_shbf >= 1, "BasisConfig: basis counts must be >= 1");
    check(envelope_p >= 1, "BasisConfig: envelope exponent must be >= 1");
}

namespace {

// Power series around x = 0:
//   j_l(x) = x^l / (2l+1)!! * sum_k (-x^2/2)^k / (k! (2l+3)(2l+5)...(2l+2k+1))
double sph_bessel_series(int l, double x) {
    double dfact = 1.0;
    for (int i = 3; i <= 2 * l + 1; i += 2) dfact *= i;
    double pref = std::pow(x, l) / dfact;
    double term = 1.0, sum = 1.0;
    const double x2h = 0.5 * x * x;
    for (int k = 1; k <= 40; ++k) {
        term *= -x2h / (k * (2.0 * l + 2.0 * k + 1.0));
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return pref * sum;
}

}  // namespace

double sph_bessel_j(int l, double x) {
    check(l >= 0, "sph_bessel_j: order must be >= 0");
    if (x <= 0.0) throw std::domain_error("sph_bessel_j: x must be > 0");
    // Upward recurrence loses digits when x << l; switch to the series there.
    if (x < 0.5 || x < 0.5 * l) return sph_bessel_series(l, x);
    const double j0 = std::sin(x) / x;
    if (l == 0) return j0;
    const double j1 = std::sin(x) / (x * x) - std::cos(x) / x;
    if (l == 1) return j1;
    double jm = j0, jc = j1;
    for (int k = 1; k < l; ++k) {
        double jn = (2.0 * k + 1.0) / x * jc - jm;
        jm = jc;
        jc = jn;
    }
    return jc;
}

double sph_bessel_j_prime(int l, double x) {
    if (l == 0) return -sph_bessel_j(1, x);
    return sph_bessel_j(l - 1, x) - (l + 1.0) / x * sph_bessel_j(l, x);
}

RootTable find_bessel_roots(int l_max, int n_max) {
    check(l_max >= 0, "find_bessel_roots: l_max must be >= 0");
    check(n_max >= 1, "find_bessel_roots: n_max must be >= 1");
    const double pi = 3.14159265358979323846;
    RootTable table;
    table.z.resize(static_cast<std::size_t>(l_max) + 1);

    auto bisect = [](int l, double lo, double hi) {
        double flo = sph_bessel_j(l, lo);
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            double fm = sph_bessel_j(l, mid);
            if (std::abs(fm) <= 1e-13 && hi - lo < 1e-12) return mid;
            if ((flo < 0.0) != (fm < 0.0)) {
                hi = mid;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        return 0.5 * (lo + hi);
    };

    // Roots of j_{l+1} interlace those of j_l, so each row brackets the next.
    // Row l needs n_max + (l_max - l) roots to bracket everything above it.
    std::vector<double> prev;
    prev.reserve(static_cast<std::size_t>(n_max + l_max) + 1);
    for (int n = 1; n <= n_max + l_max; ++n) prev.push_back(n * pi);
    table.z[0].assign(prev.begin(), prev.begin() + n_max);

    for (int l = 1; l <= l_max; ++l) {
        std::vector<double> cur;
        const int need = n_max + (l_max - l);
        for (int n = 0; n < need; ++n) {
            // n-th root of j_l lies in (prev[n], prev[n+1]).
            cur.push_back(bisect(l, prev[static_cast<std::size_t>(n)] + 1e-12,
                                 prev[static_cast<std::size_t>(n) + 1] - 1e-12));
        }
        table.z[static_cast<std::size_t>(l)].assign(cur.begin(), cur.begin() + n_max);
        prev = std::move(cur);
    }
    return table;
}

double legendre_p(int l, double x) {
    if (l == 0) return 1.0;
    if (l == 1) return x;
    double pm = 1.0, pc = x;
    for (int k = 1; k < l; ++k) {
        double pn = ((2.0 * k + 1.0) * x * pc - k * pm) / (k + 1.0);
        pm = pc;
        pc = pn;
    }
    return pc;
}

double sph_harm_m0(int l, double alpha) {
    check(l >= 0, "sph_harm_m0: degree must be >= 0");
    const double pi = 3.14159265358979323846;
    return std::sqrt((2.0 * l + 1.0) / (4.0 * pi)) * legendre_p(l, std::cos(alpha));
}

double envelope(double t, int p) {
    if (t < 0.0 || t > 1.0) throw std::domain_error("envelope: t must be in [0, 1]");
    const double a = -(p + 1.0) * (p + 2.0) / 2.0;
    const double b = p * (p + 2.0);
    const double c = -p * (p + 1.0) / 2.0;
    const double tp = std::pow(t, p);
    return 1.0 + a * tp + b * tp * t + c * tp * t * t;
}

double envelope_d1(double t, int p) {
    const double a = -(p + 1.0) * (p + 2.0) / 2.0;
    const double b = p * (p + 2.0);
    const double c = -p * (p + 1.0) / 2.0;
    const double tpm = std::pow(t, p - 1);
    return p * a * tpm + (p + 1.0) * b * tpm * t + (p + 2.0) * c * tpm * t * t;
}

double envelope_d2(double t, int p) {
    const double a = -(p + 1.0) * (p + 2.0) / 2.0;
    const double b = p * (p + 2.0);
    const double c = -p * (p + 1.0) / 2.0;
    const double tpm = std::pow(t, p - 2);
    return p * (p - 1.0) * a * tpm + (p + 1.0) * p * b * tpm * t + (p + 2.0) * (p + 1.0) * c * tpm * t * t;
}

std::vector<double> default_wave_numbers(int n_rbf, double cutoff) {
    const double pi = 3.14159265358979323846;
    std::vector<double> k(static_cast<std::size_t>(n_rbf));
    for (int n = 1; n <= n_rbf; ++n) k[static_cast<std::size_t>(n - 1)] = n * pi / cutoff;
    return k;
}

std::vector<double> radial_basis(double d, const BasisConfig& cfg, const std::vector<double>& wave_numbers) {
    if (d <= 0.0) throw std::domain_error("radial_basis: d must be > 0");
    check(d <= cfg.cutoff, "radial_basis: d must be <= cutoff");
    check(static_cast<int>(wave_numbers.size()) == cfg.n_rbf, "radial_basis: wave number count mismatch");
    const double u = envelope(d / cfg.cutoff, cfg.envelope_p);
    const double norm = std::sqrt(2.0 / cfg.cutoff);
    std::vector<double> out(static_cast<std::size_t>(cfg.n_rbf));
    for (int n = 0; n < cfg.n_rbf; ++n)
        out[static_cast<std::size_t>(n)] = u * norm * std::sin(wave_numbers[static_cast<std::size_t>(n)] * d) / d;
    return out;
}

std::vector<double> spherical_basis_2d(double d, double alpha, const BasisConfig& cfg, const RootTable& roots) {
    if (d <= 0.0) throw std::domain_error("spherical_basis_2d: d must be > 0");
    check(d <= cfg.cutoff, "spherical_basis_2d: d must be <= cutoff");
    check(roots.l_count() >= cfg.n_shbf && roots.n_count() >= cfg.n_srbf,
          "spherical_basis_2d: root table too small");
    const double c = cfg.cutoff;
    const double u = envelope(d / c, cfg.envelope_p);
    std::vector<double> out(static_cast<std::size_t>(cfg.n_shbf * cfg.n_srbf));
    for (int l = 0; l < cfg.n_shbf; ++l) {
        const double ylm = sph_harm_m0(l, alpha);
        for (int n = 1; n <= cfg.n_srbf; ++n) {
            const double z = roots.root(l, n);
            const double jn1 = sph_bessel_j(l + 1, z);
            const double norm = std::sqrt(2.0 / (c * c * c * jn1 * jn1));
            out[static_cast<std::size_t>(l * cfg.n_srbf + n - 1)] = u * norm * sph_bessel_j(l, z * d / c) * ylm;
        }
    }
    return out;
}

std::vector<double> gaussian_radial_basis(double d, double cutoff, int count, double gamma, int envelope_p) {
    if (d <= 0.0) throw std::domain_error("gaussian_radial_basis: d must be > 0");
    check(count >= 1, "gaussian_radial_basis: count must be >= 1");
    const double u = envelope(d / cutoff, envelope_p);
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int n = 0; n < count; ++n) {
        const double mu = (count == 1) ? 0.0 : cutoff * n / (count - 1.0);
        out[static_cast<std::size_t>(n)] = u * std::exp(-gamma * (d - mu) * (d - mu));
    }
    return out;
}

}  // namespace dimenet
