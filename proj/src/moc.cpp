#include "latentme/correction.hpp"

#include "latentme/parallel.hpp"
#include "latentme/random.hpp"

#include <cmath>
#include <numeric>

namespace latentme::correction {

MocResult moc(const Vector& y, const measurement::LatentScores& scores, std::size_t draws,
              std::uint64_t seed, core::HcType hc) {
    if (!scores.posterior_sd) {
        throw Error(ErrorCode::MissingPosterior,
                    "method of composition needs posterior spreads (use the irt method)");
    }
    if (draws < kMinMocDraws) {
        throw Error(ErrorCode::InvalidArgument,
                    "method of composition needs at least " + std::to_string(kMinMocDraws) + " draws");
    }
    const Vector& centre = scores.scores;
    const Vector& spread = *scores.posterior_sd;
    if (centre.size() != y.size() || spread.size() != y.size()) {
        throw Error(ErrorCode::DimensionMismatch, "scores, spreads and outcome differ in length");
    }

    MocResult out;
    out.draws_requested = draws;
    out.draws.resize(draws);
    parallel_for(draws, [&](std::size_t t) {
        Rng rng = make_rng(seed, {0x30c, t});
        std::normal_distribution<double> normal(0.0, 1.0);
        Vector x(centre.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            x(i) = centre(i) + spread(i) * normal(rng);
        }
        // A draw of the trait itself, so it carries the identification scale.
        x = core::standardize(x);
        const core::RegressionFit fit = core::ols_fit(y, x, hc);
        out.draws[t] = fit.slope() + fit.slope_se_hc() * normal(rng);
    });

    out.point_estimate = std::accumulate(out.draws.begin(), out.draws.end(), 0.0) /
                         static_cast<double>(draws);
    for (double level : {0.025, 0.5, 0.975}) {
        out.quantiles[level] = core::quantile(out.draws, level);
    }
    return out;
}

}  // namespace latentme::correction
