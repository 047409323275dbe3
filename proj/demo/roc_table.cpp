// Prints P_D of classical and quantum illumination at a few false-alarm rates.

#include <cstdio>

#include "qi/detection_models.hpp"
#include "qi/roc.hpp"

int main()
{
    qi::SystemParams p;
    const auto ci = qi::ci_moments(p);
    const auto qi_ideal = qi::qi_snr_moments(p);
    p.zeta = qi::fit_zeta(1.48, p.kappa_i);
    const auto qi_fit = qi::qi_snr_moments(p);

    std::printf("%-10s %-10s %-10s %-10s\n", "p_f", "ci", "qi_ideal", "qi_fitted");
    for (double pf : {1e-6, 1e-4, 1e-2, 0.1}) {
        std::printf("%-10.0e %-10.4f %-10.4f %-10.4f\n", pf, qi::roc::pd_at_pf(ci, pf),
                    qi::roc::pd_at_pf(qi_ideal, pf), qi::roc::pd_at_pf(qi_fit, pf));
    }
}
