// Regenerates the committed ACAS-shaped fixture networks under tests/data/.
#include "boxrepair/specio.hpp"
#include "fixtures.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>

using namespace boxrepair;

int main(int argc, char **argv)
{
    CLI::App app{"Generate ACAS-shaped fixture networks with a planted Property-2 defect"};
    std::string out_dir = "tests/data";
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::size_t samples = 100000;
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--seeds", seeds, "Fixture seeds");
    app.add_option("--samples", samples, "Samples used to confirm the defect");
    CLI11_PARSE(app, argc, argv);

    const Property prop = fixtures::acas_property2().front();
    int missing_defect = 0;
    for (std::uint64_t seed : seeds) {
        const auto start = std::chrono::steady_clock::now();
        const Network net = fixtures::make_acas_like(seed);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        fixtures::Rng rng(seed + 1000);
        std::size_t bad = 0;
        for (std::size_t s = 0; s < samples; ++s)
            if (!net.satisfies(fixtures::sample_in_box(rng, prop.input), prop))
                ++bad;
        const Counterexample ce = generate_counterexample(net, prop);

        const std::filesystem::path path = std::filesystem::path(out_dir) / ("acas_like_" + std::to_string(seed) + ".nnet");
        write_nnet(net, path);
        std::cout << path.string() << ": trained in " << secs << " s, " << bad << '/' << samples
                  << " sampled violations, min_lb " << ce.report.min_lb() << '\n';
        if (bad == 0)
            ++missing_defect;
    }
    return missing_defect == 0 ? 0 : 1;
}
