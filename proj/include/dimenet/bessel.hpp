#ifndef DIMENET_BESSEL_HPP
#define DIMENET_BESSEL_HPP

#include <vector>

#include "dimenet/tensor.hpp"

namespace dimenet {

/// Basis hyperparameters. Counts are 1-based sizes, p is the envelope
/// polynomial exponent.
struct BasisConfig {
    double cutoff = 5.0;
    int n_rbf = 6;
    int n_srbf = 6;
    int n_shbf = 7;
    int envelope_p = 6;

    void validate() const;
};

/// Positive roots of the spherical Bessel functions j_l.
/// z[l][n-1] is the n-th positive root of j_l.
struct RootTable {
    std::vector<std::vector<double>> z;

    double root(int l, int n) const { return z.at(static_cast<std::size_t>(l)).at(static_cast<std::size_t>(n - 1)); }
    int l_count() const { return static_cast<int>(z.size()); }
    int n_count() const { return z.empty() ? 0 : static_cast<int>(z[0].size()); }
};

/// Spherical Bessel function of the first kind, j_l(x), x > 0.
/// Upward recurrence for x not small against l, power series otherwise.
double sph_bessel_j(int l, double x);

/// First derivative j_l'(x), used by the differentiation engine.
double sph_bessel_j_prime(int l, double x);

/// Roots of j_l for l in [0, l_max], n in [1, n_max], bracketed via the
/// interlacing property and refined by bisection to |j_l(z)| <= 1e-12.
RootTable find_bessel_roots(int l_max, int n_max);

/// Spherical harmonic at m = 0: Y_l^0(alpha) = sqrt((2l+1)/4pi) P_l(cos alpha).
double sph_harm_m0(int l, double alpha);

/// Legendre polynomial P_l(x) by the three-term recurrence.
double legendre_p(int l, double x);

/// Smooth cutoff polynomial u(t) on t = d/c in [0, 1], root of
/// multiplicity 3 at t = 1.
double envelope(double t, int p);
double envelope_d1(double t, int p);
double envelope_d2(double t, int p);

/// Enveloped radial Bessel basis e_RBF(d), length n_rbf.
/// wave_numbers k_n default to n*pi/c and may be fine-tuned by training.
std::vector<double> radial_basis(double d, const BasisConfig& cfg, const std::vector<double>& wave_numbers);

/// Enveloped 2D spherical Fourier-Bessel basis a_SBF(d, alpha), flattened
/// as (l, n) -> l*n_srbf + (n-1).
std::vector<double> spherical_basis_2d(double d, double alpha, const BasisConfig& cfg, const RootTable& roots);

/// Enveloped Gaussian radial basis (ablation): exp(-gamma (d - mu_n)^2)
/// with mu_n uniform on [0, c].
std::vector<double> gaussian_radial_basis(double d, double cutoff, int count, double gamma, int envelope_p);

/// Default wave numbers n*pi/c, n = 1..n_rbf.
std::vector<double> default_wave_numbers(int n_rbf, double cutoff);

}  // namespace dimenet

#endif
