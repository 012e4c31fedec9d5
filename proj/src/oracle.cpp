#include "fbqt/oracle.hpp"

#include "fbqt/dynamics.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <sstream>

namespace fbqt {

namespace {

Eigen::Matrix4cd kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    Eigen::Matrix4cd out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

Eigen::Matrix2cd sigma_minus() {
    Eigen::Matrix2cd s = Eigen::Matrix2cd::Zero();
    s(0, 1) = 1.0;
    return s;
}

Eigen::Vector4cd vec(const Eigen::Matrix2cd& m) {
    return Eigen::Map<const Eigen::Vector4cd>(m.data());
}

Eigen::Matrix2cd unvec(const Eigen::Vector4cd& v) {
    return Eigen::Map<const Eigen::Matrix2cd>(v.data());
}

} // namespace

Eigen::Matrix4cd tls_liouvillian(const ModelParams& p) {
    const Eigen::Matrix2cd sm = sigma_minus();
    const Eigen::Matrix2cd sp = sm.adjoint();
    const Eigen::Matrix2cd ee = sp * sm;
    const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
    const Eigen::Matrix2cd h = p.delta * ee + 0.5 * p.Omega * (sp + sm);

    // vec(A rho B) = (B^T kron A) vec(rho)
    Eigen::Matrix4cd l = cd{0.0, -1.0} * (kron(id, h) - kron(h.transpose(), id));
    auto dissipator = [&](const Eigen::Matrix2cd& c, double rate) {
        const Eigen::Matrix2cd cdc = c.adjoint() * c;
        l += rate * (kron(c.conjugate(), c) - 0.5 * kron(id, cdc) - 0.5 * kron(cdc.transpose(), id));
    };
    dissipator(sm, p.gamma_L + p.gamma_R + p.gamma0);
    dissipator(ee, p.gamma_prime);
    return l;
}

DensityMatrix lindblad_evolve(const DensityMatrix& rho0, const ModelParams& params, double t) {
    if (rho0.rows() != 2 || rho0.cols() != 2) throw std::invalid_argument("TLS density matrix must be 2x2");
    const Eigen::Matrix4cd prop = (tls_liouvillian(params) * t).exp();
    const Eigen::Vector4cd out = prop * vec(rho0);
    if (!out.allFinite()) throw SimulationError("Lindblad evolution produced non-finite entries");
    return unvec(out);
}

DensityMatrix lindblad_steady_state(const ModelParams& params) {
    Eigen::Matrix4cd a = tls_liouvillian(params);
    Eigen::Vector4cd rhs = Eigen::Vector4cd::Zero();
    // replace the rho_gg row by the trace condition
    a.row(0) << 1.0, 0.0, 0.0, 1.0;
    rhs(0) = 1.0;
    const Eigen::Vector4cd x = a.fullPivLu().solve(rhs);
    return unvec(x);
}

Eigen::VectorXd lindblad_excited_series(const ModelParams& params, double dt, std::int64_t n_steps) {
    const Eigen::Matrix4cd one_step = (tls_liouvillian(params) * dt).exp();
    Eigen::Vector4cd v = Eigen::Vector4cd::Zero();
    v(0) = 1.0;
    Eigen::VectorXd out(n_steps);
    for (std::int64_t s = 0; s < n_steps; ++s) {
        v = one_step * v;
        out(s) = v(3).real();
    }
    return out;
}

RegressionCorrelations regression_correlations(const ModelParams& params, double t2_max, double dt) {
    const std::int64_t k_max = steps_for(t2_max, dt);
    const Eigen::Matrix2cd sm = sigma_minus();
    const Eigen::Matrix2cd sp = sm.adjoint();
    const Eigen::Matrix4cd one_step = (tls_liouvillian(params) * dt).exp();
    const Eigen::Matrix2cd rho = lindblad_steady_state(params);

    RegressionCorrelations out;
    out.excited = rho(1, 1).real();
    out.coherence = (sm * rho).trace();
    out.delays = Eigen::VectorXd::LinSpaced(k_max + 1, 0.0, dt * static_cast<double>(k_max));
    out.dipole_G1.resize(k_max + 1);
    out.dipole_G2.resize(k_max + 1);

    Eigen::Vector4cd x1 = vec(sm * rho);       // regressed for <sigma^+(t2) sigma^-(0)>
    Eigen::Vector4cd x2 = vec(sm * rho * sp);  // regressed for G2
    for (std::int64_t k = 0; k <= k_max; ++k) {
        out.dipole_G1(k) = (sp * unvec(x1)).trace();
        out.dipole_G2(k) = (sp * sm * unvec(x2)).trace().real();
        x1 = one_step * x1;
        x2 = one_step * x2;
    }
    out.g1 = out.dipole_G1 / out.excited;
    out.g2 = out.dipole_G2 / (out.excited * out.excited);
    return out;
}

namespace {

// Lowering by bin j; returns false if the sector has no photon there.
bool remove_photon(const Sector& s, int j, Sector& out) {
    if (!s.occupies(j)) return false;
    if (s.photons == 1)
        out = Sector::vacuum();
    else
        out = Sector::one(s.j == j ? s.k : s.j);
    return true;
}

} // namespace

Eigen::MatrixXcd dense_bin_annihilator(const Basis& basis, int j) {
    if (j < 0 || j >= basis.n_bins()) throw std::out_of_range("bin index outside loop");
    const Eigen::Index d = basis.dim();
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(d, d);
    for (Eigen::Index c = 0; c < d; ++c) {
        const BasisIndex src = basis.at(c);
        Sector lowered;
        if (remove_photon(src.sector, j, lowered)) b(basis.index_of(src.tls, lowered), c) = 1.0;
    }
    return b;
}

namespace {

Eigen::MatrixXcd dense_sigma_minus(const Basis& basis) {
    const Eigen::Index d = basis.dim();
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(d, d);
    for (Eigen::Index c = 0; c < d; ++c) {
        const BasisIndex src = basis.at(c);
        if (src.tls == Tls::e) s(basis.index_of(Tls::g, src.sector), c) = 1.0;
    }
    return s;
}

} // namespace

Eigen::MatrixXcd dense_effective_hamiltonian(const Basis& basis, const ModelParams& params) {
    const ModelParams p = validated(params);
    const Eigen::MatrixXcd sm = dense_sigma_minus(basis);
    const Eigen::MatrixXcd sp = sm.adjoint();
    const Eigen::MatrixXcd ee = sp * sm;
    const double dt = p.dt();

    Eigen::MatrixXcd h = p.delta * ee + 0.5 * p.Omega * (sp + sm);
    if (p.feedback == FeedbackMode::Loop) {
        const Eigen::MatrixXcd coupling = std::sqrt(p.gamma_L / dt) * sp * dense_bin_annihilator(basis, p.n_bins - 1);
        h += coupling + coupling.adjoint();
    }
    const Eigen::MatrixXcd out = std::polar(std::sqrt(p.gamma_R / dt), p.phi) * sp * dense_bin_annihilator(basis, 0);
    h += out + out.adjoint();

    double loss = p.gamma0 + p.gamma_prime;
    if (p.feedback == FeedbackMode::Markovian) loss += p.gamma_L;
    h -= cd{0.0, 0.5 * loss} * ee;
    return h;
}

CollisionOracle::CollisionOracle(const ModelParams& params) : params_(validated(params)), basis_(params.n_bins) {
    if (params_.n_bins > kOracleMaxBins) {
        std::ostringstream os;
        os << "collision oracle supports at most " << kOracleMaxBins << " bins, got " << params_.n_bins;
        throw ConfigError(os.str());
    }
    const Eigen::Index d = basis_.dim();
    u_ = (cd{0.0, -params_.dt()} * dense_effective_hamiltonian(basis_, params_)).exp();
    b0_ = dense_bin_annihilator(basis_, 0);
    lowering_ = dense_sigma_minus(basis_);
    excited_ = lowering_.adjoint() * lowering_;

    Eigen::MatrixXcd shift = Eigen::MatrixXcd::Zero(d, d);
    Eigen::MatrixXcd keep = Eigen::MatrixXcd::Zero(d, d);
    for (Eigen::Index c = 0; c < d; ++c) {
        const BasisIndex src = basis_.at(c);
        if (src.sector.occupies(0)) continue;
        keep(c, c) = 1.0;
        Sector moved = src.sector;
        if (moved.photons >= 1) --moved.j;
        if (moved.photons == 2) --moved.k;
        shift(basis_.index_of(src.tls, moved), c) = 1.0;
    }
    shift_empty_ = shift * keep;
    shift_detected_ = shift * b0_;

    rho_ = DensityMatrix::Zero(d, d);
    rho_(0, 0) = 1.0;
}

DensityMatrix CollisionOracle::coherent_part(const DensityMatrix& x) const {
    const double dt = params_.dt();
    DensityMatrix out = u_ * x * u_.adjoint();
    if (params_.gamma0 > 0.0) out += (dt * params_.gamma0) * lowering_ * x * lowering_.adjoint();
    if (params_.gamma_prime > 0.0) out += (dt * params_.gamma_prime) * excited_ * x * excited_;
    if (params_.feedback == FeedbackMode::Markovian && params_.gamma_L > 0.0)
        out += (dt * params_.gamma_L) * lowering_ * x * lowering_.adjoint();
    return out;
}

DensityMatrix CollisionOracle::relabel(const DensityMatrix& x) const {
    return shift_empty_ * x * shift_empty_.adjoint() + shift_detected_ * x * shift_detected_.adjoint();
}

double CollisionOracle::step() {
    DensityMatrix rho = coherent_part(rho_);
    rho /= rho.trace().real();
    const double bin0 = (b0_.adjoint() * b0_ * rho).trace().real();
    rho_ = relabel(rho);
    rho_ /= rho_.trace().real();
    if (!rho_.allFinite()) throw SimulationError("collision oracle produced non-finite entries");
    return bin0;
}

CollisionCorrelations CollisionOracle::correlations(double t_ss, double t2_max) {
    const std::int64_t k_ss = steps_for(t_ss, params_.dt());
    const std::int64_t k_max = steps_for(t2_max, params_.dt());
    rho_ = DensityMatrix::Zero(basis_.dim(), basis_.dim());
    rho_(0, 0) = 1.0;
    for (std::int64_t s = 0; s + 1 < k_ss; ++s) step();

    CollisionCorrelations out;
    out.delays = Eigen::VectorXd::LinSpaced(k_max + 1, 0.0, params_.dt() * static_cast<double>(k_max));
    out.G1.resize(k_max + 1);
    out.G2.resize(k_max + 1);
    out.lead_population.resize(k_max + 1);

    const Eigen::MatrixXcd n0 = b0_.adjoint() * b0_;
    DensityMatrix rho = coherent_part(rho_);
    rho /= rho.trace().real();
    out.steady_population = (n0 * rho).trace().real();
    out.coherence = (b0_ * rho).trace();

    // follower-lead operator |B0 psi><psi| and the forced-detection state B0 rho B0^dag
    DensityMatrix x = b0_ * rho;
    DensityMatrix y = b0_ * rho * b0_.adjoint();
    out.G1(0) = (b0_.adjoint() * x).trace();
    out.G2(0) = (n0 * y).trace().real();
    out.lead_population(0) = out.steady_population;
    for (std::int64_t k = 1; k <= k_max; ++k) {
        rho = coherent_part(relabel(rho));
        x = coherent_part(relabel(x));
        y = coherent_part(relabel(y));
        const double trace = rho.trace().real();
        rho /= trace;
        x /= trace;
        y /= trace;
        out.G1(k) = (b0_.adjoint() * x).trace();
        out.G2(k) = (n0 * y).trace().real();
        out.lead_population(k) = (n0 * rho).trace().real();
    }
    const double w = out.steady_population;
    out.g2 = out.G2 / (w * w);
    out.g1.resize(k_max + 1);
    for (std::int64_t k = 0; k <= k_max; ++k) out.g1(k) = out.G1(k) / std::sqrt(out.lead_population(k) * w);
    return out;
}

CollisionOracleSeries CollisionOracle::run(double t_end) {
    const std::int64_t n_steps = steps_for(t_end, params_.dt());
    CollisionOracleSeries out;
    out.times = Eigen::VectorXd::LinSpaced(n_steps, params_.dt(), params_.dt() * static_cast<double>(n_steps));
    out.flux.resize(n_steps);
    out.tls_population.resize(n_steps);
    out.p0.resize(n_steps);
    out.p1.resize(n_steps);
    out.p2.resize(n_steps);
    out.purity.resize(n_steps);

    for (std::int64_t s = 0; s < n_steps; ++s) {
        out.flux(s) = step() / params_.dt();
        const Eigen::VectorXd diag = rho_.diagonal().real();
        out.tls_population(s) = (excited_.diagonal().real().cwiseProduct(diag)).sum();
        double p[3] = {0.0, 0.0, 0.0};
        for (Eigen::Index i = 0; i < basis_.dim(); ++i) p[basis_.at(i).sector.photons] += diag(i);
        out.p0(s) = p[0];
        out.p1(s) = p[1];
        out.p2(s) = p[2];
        out.purity(s) = (rho_ * rho_).trace().real();
    }
    return out;
}

} // namespace fbqt
