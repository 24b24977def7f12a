// Writes the bundled four-item knowledge fixture: binary quiz items, a
// continuous outcome, a region column for cluster bootstraps and a handful
// of blank cells.

#include "latentme/cli/commands.hpp"
#include "latentme/cli/report.hpp"
#include "latentme/random.hpp"
#include "latentme/simulation.hpp"

#include <iostream>
#include <random>
#include <sstream>

int main(int argc, char** argv) {
    using namespace latentme;
    const std::string out = argc > 1 ? argv[1] : "data/knowledge_fixture.csv";
    const std::uint64_t seed = 20240611;
    constexpr std::size_t n = 1500;

    simulation::DgpSpec dgp;
    dgp.beta0 = 0.2;
    dgp.beta_x = 0.42;
    dgp.sigma_eps2 = 0.8;
    dgp.discrimination = core::Vector{{0.55, 0.6, 0.5, 0.58}};
    dgp.difficulty = core::Vector{{0.3, -0.4, 0.9, -0.1}};

    const core::Vector x = simulation::draw_latent(dgp, n, derive_seed(seed, {1}));
    const auto w = simulation::simulate_indicators(x, dgp, 4, derive_seed(seed, {2}));
    const core::Vector y = simulation::simulate_outcome(x, dgp, derive_seed(seed, {3}));

    Rng rng = make_rng(seed, {4});
    std::uniform_int_distribution<int> region(1, 12);
    std::uniform_real_distribution<double> unif;

    std::ostringstream os;
    os << "id,region,know_1,know_2,know_3,know_4,voteduty\n";
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        os << i + 1 << ",\"R" << region(rng) << '"';
        for (Eigen::Index j = 0; j < 4; ++j) {
            os << ',';
            if (unif(rng) >= 0.003) os << static_cast<int>(w.data(ii, j));
        }
        os << ',' << cli::format_number(y(ii)) << '\n';
    }
    cli::write_file_atomic(out, os.str());
    std::cerr << "wrote " << out << '\n';
}
