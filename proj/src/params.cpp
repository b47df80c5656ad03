/// @file params.cpp
/// @brief Validation of scheme parameters.

#include "scns/params.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace scns {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

std::string gamma_hypothesis_warning(const SchemeParams& p) {
    const double g2 = p.gamma * p.gamma;
    const double limit = p.eps() / 484.0;
    if (g2 < limit) return {};
    std::ostringstream os;
    os.precision(6);
    os << "warning: gamma^2 = " << g2 << " is not below (1/484)*eps = " << limit
       << "; the a-priori concentration bounds assume gamma^2 < (1/484) eps";
    return os.str();
}

std::vector<std::string> SchemeParams::validate() const {
    require(vartheta > 0.0 && std::isfinite(vartheta), "vartheta (fluid viscosity) must be > 0");
    require(mu > 0.0 && std::isfinite(mu), "mu (chemical diffusion) must be > 0");
    require(delta > 0.0 && std::isfinite(delta), "delta (organism diffusion) must be > 0");
    require(std::isfinite(alpha) && std::isfinite(gamma), "alpha and gamma must be finite");
    require(m >= 1, "m must be >= 1");
    require(N >= 1, "N (time steps) must be >= 1");
    require(T > 0.0 && std::isfinite(T), "T must be > 0");
    require(fp_tol > 0.0, "fp_tol must be > 0");
    require(fp_max_iters >= 1, "fp_max_iters must be >= 1");
    require(tol_linear > 0.0 && tol_linear < 1.0, "tol_linear must be in (0,1)");
    require(noise_refine_log2 >= 0 && noise_refine_log2 <= 10, "noise_refine_log2 must be in [0,10]");
    if (!Phi.v.empty()) {
        require(Phi.grid == grid, "Phi must live on the scheme grid");
        require(Phi.all_finite(), "Phi must be finite");
    }
    std::vector<std::string> warnings;
    if (auto w = gamma_hypothesis_warning(*this); !w.empty()) warnings.push_back(w);
    if (tol_linear > 0.01 * fp_tol)
        warnings.push_back("warning: tol_linear is not well below fp_tol; CG round-off may stall or "
                           "short-circuit the Picard stopping test");
    return warnings;
}

ScalarField SchemeParams::potential() const { return Phi.v.empty() ? ScalarField(grid) : Phi; }

}  // namespace scns
