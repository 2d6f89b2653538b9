#include "boxrepair/cli.hpp"

#include "boxrepair/specio.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <tuple>

namespace boxrepair {

namespace {

struct Options {
    std::string network;
    std::string properties;
    std::string dataset;
    std::string point;
    std::string gene;
    std::string report;
    std::string out;
    std::string bounds_mode = "backward";
    std::optional<std::size_t> split;
    double radius = 0.1;
    std::size_t box_iters = 100;
    std::size_t repair_iters = 1000;
    std::size_t budget = 10000;
    double lr = 1e-2;
    std::uint64_t seed = 0;
    std::size_t audit_samples = 0;
    std::size_t property_index = 0;
    bool timing = false;
};

void add_model_flags(CLI::App &cmd, Options &o)
{
    cmd.add_option("--split", o.split, "Layer index where the frozen head begins");
    cmd.add_option("--bounds-mode", o.bounds_mode, "Intermediate bounds: backward or ibp")
        ->check(CLI::IsMember({"backward", "ibp"}));
}

void add_repair_flags(CLI::App &cmd, Options &o)
{
    add_model_flags(cmd, o);
    cmd.add_option("--radius", o.radius, "Proxy box radius")->check(CLI::PositiveNumber);
    cmd.add_option("--box-iters", o.box_iters, "Max center shifts per proxy box")->check(CLI::PositiveNumber);
    cmd.add_option("--repair-iters", o.repair_iters, "Max optimizer steps per point-wise repair")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--budget", o.budget, "Max live sub-properties (region repair)")->check(CLI::PositiveNumber);
    cmd.add_option("--lr", o.lr, "Adam learning rate")->check(CLI::PositiveNumber);
    cmd.add_option("--seed", o.seed, "Seed for the post-repair sampling audit");
    cmd.add_option("--audit-samples", o.audit_samples, "Uniform samples per property for the post-repair audit");
    cmd.add_option("--report", o.report, "Write a JSON report here");
    cmd.add_option("--out", o.out, "Write the repaired network here (.nnet or JSON)");
    cmd.add_flag("--timing", o.timing, "Include wall time in the report");
}

RepairConfig make_config(const Options &o)
{
    RepairConfig cfg;
    cfg.radius = o.radius;
    cfg.box_iterations = o.box_iters;
    cfg.repair_iterations = o.repair_iters;
    cfg.budget = o.budget;
    cfg.adam.lr = o.lr;
    cfg.bounds_mode = bounds_mode_from_string(o.bounds_mode);
    return cfg;
}

Vector parse_point(const std::string &spec, std::size_t dim)
{
    std::string text = spec;
    if (std::filesystem::exists(spec)) {
        std::ifstream in(spec);
        std::getline(in, text);
    }
    Vector x;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        try {
            std::size_t used = 0;
            x.push_back(std::stod(token, &used));
        } catch (const std::exception &) {
            throw ParseError("point: non-numeric value '" + token + "'");
        }
    }
    if (x.size() == dim + 1)
        x.pop_back();
    if (x.size() != dim)
        throw ParseError("point: expected " + std::to_string(dim) + " values, got " + std::to_string(x.size()));
    return x;
}

/// Uniform samples of every property box; returns the number of constraint violations.
std::size_t audit(const Network &net, const std::vector<Property> &props, std::size_t samples, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t violations = 0;
    Vector x;
    for (const Property &p : props) {
        x.resize(p.input.dim());
        for (std::size_t s = 0; s < samples; ++s) {
            for (std::size_t i = 0; i < x.size(); ++i)
                x[i] = p.input.lower[i] + unit(rng) * (p.input.upper[i] - p.input.lower[i]);
            if (!net.satisfies(x, p))
                ++violations;
        }
    }
    return violations;
}

void save_any(const Network &net, const std::string &path)
{
    if (std::filesystem::path(path).extension() == ".nnet")
        write_nnet(net, std::filesystem::path(path));
    else
        save_network(net, path);
}

int run_verify(const Options &o, std::ostream &out)
{
    const Network net = load_network(o.network, o.split);
    const auto props = parse_properties(o.properties, net);
    const BoundsMode mode = bounds_mode_from_string(o.bounds_mode);
    bool all = true;
    out << std::setprecision(10);
    for (const Property &p : props) {
        const Counterexample ce = generate_counterexample(net, p, mode);
        const char *verdict = ce.report.verified() ? "VERIFIED" : ce.confirmed ? "FALSIFIED" : "UNKNOWN";
        all = all && ce.report.verified();
        out << verdict << ' ' << p.label << " min_lb=" << ce.report.min_lb()
            << " violated=" << ce.report.violated.size() << '/' << p.constraints.size() << '\n';
    }
    return all ? 0 : 1;
}

int run_repair(const Options &o, bool region, std::ostream &out)
{
    const Network net = load_network(o.network, o.split);
    const auto props = parse_properties(o.properties, net);
    const RepairConfig cfg = make_config(o);
    const RepairOutcome outcome = region ? region_wise_repair(net, props, cfg) : point_wise_repair(net, props, cfg);

    nlohmann::json report = repair_report(outcome, region ? "region" : "point", o.timing);
    if (o.audit_samples > 0) {
        const std::size_t bad = audit(outcome.network, props, o.audit_samples, o.seed);
        report["audit"] = {{"samples_per_property", o.audit_samples}, {"seed", o.seed}, {"violations", bad}};
    }
    if (!o.report.empty()) {
        std::ofstream rf(o.report);
        if (!rf)
            throw std::runtime_error("cannot write " + o.report);
        rf << report.dump(2) << '\n';
    }
    if (!o.out.empty() && outcome.repaired())
        save_any(outcome.network, o.out);

    out << (outcome.repaired() ? "REPAIRED" : "FAILED");
    if (region)
        out << " properties=" << outcome.stats.final_properties << " refinements=" << outcome.stats.refinements;
    out << " steps=" << outcome.stats.optimizer_steps;
    if (!outcome.diagnostic.empty())
        out << " (" << outcome.diagnostic << ')';
    out << '\n';
    return outcome.repaired() ? 0 : 1;
}

int run_eval(const Options &o, std::ostream &out)
{
    const Network net = load_network(o.network, o.split);
    const Dataset data = load_dataset(o.dataset);
    const std::vector<Property> props = o.properties.empty() ? std::vector<Property>{}
                                                             : parse_properties(o.properties, net);
    const std::vector<Property> gene = o.gene.empty() ? std::vector<Property>{} : parse_properties(o.gene, net);
    const Metrics m = eval_metrics(net, data, props, gene);
    out << std::setprecision(6) << "acc " << m.acc << '\n';
    if (m.psr)
        out << "psr " << *m.psr << '\n';
    if (m.gene)
        out << "gene " << *m.gene << '\n';
    return 0;
}

int run_synth_box(const Options &o, std::ostream &out)
{
    const Network net = load_network(o.network, o.split);
    const auto props = parse_properties(o.properties, net);
    if (o.property_index >= props.size())
        throw ParseError("synth-box: property index out of range");
    const Property &prop = props[o.property_index];
    const Vector x = parse_point(o.point, net.input_dim());

    SynthesisOptions so;
    so.radius = o.radius;
    so.max_iterations = o.box_iters;
    so.mode = bounds_mode_from_string(o.bounds_mode);
    so.record_trajectory = true;
    std::tie(so.feature_floor, so.feature_ceiling) = net.layer(net.split() - 1).activation.range();
    const SynthesisResult res = synthesize_proxy_box(net.head(), net.forward_features(x), prop.constraints, so);

    out << std::setprecision(std::numeric_limits<double>::max_digits10) << "iteration";
    for (std::size_t i = 0; i < prop.constraints.size(); ++i)
        out << ",lb" << i;
    for (std::size_t i = 0; i < net.feature_dim(); ++i)
        out << ",h" << i;
    out << '\n';
    for (const SynthesisStep &step : res.trajectory) {
        out << step.iteration;
        for (double v : step.lb)
            out << ',' << v;
        for (double v : step.center)
            out << ',' << v;
        out << '\n';
    }
    return res.ok() ? 0 : 1;
}

} // namespace

int cli_main(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Provable repair of dense feedforward classifiers"};
    app.require_subcommand(1);
    Options o;

    auto *verify = app.add_subcommand("verify", "Bound every property over its input box");
    verify->add_option("network", o.network, "Model (.nnet or JSON)")->required();
    verify->add_option("properties", o.properties, "Property JSON")->required();
    add_model_flags(*verify, o);

    auto *repair = app.add_subcommand("repair", "Repair a model against a property file");
    repair->require_subcommand(1);
    auto *point = repair->add_subcommand("point", "Point-wise repair");
    auto *region = repair->add_subcommand("region", "Region-wise repair");
    for (CLI::App *cmd : {point, region}) {
        cmd->add_option("network", o.network, "Model (.nnet or JSON)")->required();
        cmd->add_option("properties", o.properties, "Property JSON")->required();
        add_repair_flags(*cmd, o);
    }

    auto *eval = app.add_subcommand("eval", "Accuracy and property satisfaction");
    eval->add_option("network", o.network, "Model (.nnet or JSON)")->required();
    eval->add_option("dataset", o.dataset, "Headerless CSV, label last")->required();
    eval->add_option("properties", o.properties, "Property JSON for PSR");
    eval->add_option("--gene", o.gene, "Generalization property JSON");
    add_model_flags(*eval, o);

    auto *synth = app.add_subcommand("synth-box", "Print the proxy-box center trajectory as CSV");
    synth->add_option("network", o.network, "Model (.nnet or JSON)")->required();
    synth->add_option("point", o.point, "Comma-separated input, or a file holding one CSV row")->required();
    synth->add_option("properties", o.properties, "Property JSON")->required();
    synth->add_option("--property-index", o.property_index, "Which property's constraints to use");
    synth->add_option("--radius", o.radius, "Proxy box radius")->check(CLI::PositiveNumber);
    synth->add_option("--box-iters", o.box_iters, "Max center shifts")->check(CLI::PositiveNumber);
    add_model_flags(*synth, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*verify)
            return run_verify(o, out);
        if (*point)
            return run_repair(o, false, out);
        if (*region)
            return run_repair(o, true, out);
        if (*eval)
            return run_eval(o, out);
        if (*synth)
            return run_synth_box(o, out);
    } catch (const ParseError &e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument &e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

} // namespace boxrepair
