#pragma once
// SQUID-mediated coupling constants and assembly of the chain Hamiltonian
// in the truncated dressed product basis. Site 0 is the most significant
// index of the product basis; adjacent sites must carry different species.

#include "qrsim/rabi.hpp"

#include <Eigen/Dense>
#include <vector>

namespace qrsim::circuit {

struct CircuitParams {
    double phi_o = 0.0;        // reduced flux quantum, Wb
    double i_c = 0.0;          // SQUID critical current, A
    double z_ohm = 0.0;        // resonator impedance
    double c_f = 0.0;          // resonator capacitance, F
    double omega_r = 0.0;      // resonator angular frequency, rad/s
    double phi_offset = 0.0;   // DC flux offset, radians of normalized flux

    void validate() const;
};

struct PQ {
    double p = 0.0;  // static coupling, rad/s
    double q = 0.0;  // flux-modulated coupling, rad/s
};

// P = phi_o*omega_r / (4 I_c Z^2 C cos(phi_offset)),
// Q = P * sin(phi_offset)/cos(phi_offset).
PQ effective_pq(const CircuitParams& params);

struct FluxTone {
    double amplitude = 0.0;  // dimensionless normalized-flux amplitude
    double omega = 0.0;      // rad/s
    double phase = 0.0;      // radians
};

struct FluxSignal {
    std::vector<FluxTone> tones;
    double dc = 0.0;

    double eval(double t) const;
    // Worst-case |flux| (sum of |amplitudes| + |dc|); linearization monitor.
    double peak_estimate() const;
    double max_omega() const;
};

struct ChainConfig {
    std::vector<const rabi::DressedSite*> sites;  // alternating species
    double p = 0.0;  // per-SQUID static coupling, uniform
    double q = 0.0;  // per-SQUID modulated coupling, uniform

    int n_sites() const { return static_cast<int>(sites.size()); }
    int n_kept() const { return sites.empty() ? 0 : sites.front()->n_kept(); }
    int dim() const;
    void validate() const;
};

// Static chain: per-site diagonal dressed energies, the parity-preserving
// off-diagonal z terms scaled by the adjacent P sum, and the
// -2 sqrt(P P) chi(x)chi cross terms. Real symmetric.
Eigen::MatrixXd build_static_chain(const ChainConfig& chain);

// Static part plus the flux-modulated z and cross terms at time t.
// signals.size() must equal n_sites-1 (one per SQUID).
Eigen::MatrixXd build_modulated_chain(const ChainConfig& chain,
                                      const std::vector<FluxSignal>& signals,
                                      double t);

// Diagonal of the global parity operator (tensor product of site parities)
// over the chain product basis.
Eigen::VectorXd chain_parity_diagonal(const ChainConfig& chain);

enum class ResonatorPosition { edge, bulk };

// Mode wavenumber: bulk kappa = n*pi/length (n >= 1), edge
// kappa = (n + 1/2)*pi/length (n >= 0); lambda/4 edges, lambda/2 bulk.
double resonator_mode_wavenumber(ResonatorPosition pos, int n, double length);

// Embed a per-site operator into the chain product space.
Eigen::MatrixXd embed_site_operator(const Eigen::MatrixXd& op, int site,
                                    int n_sites, int n_kept);

} // namespace qrsim::circuit
