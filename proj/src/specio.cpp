#include "boxrepair/specio.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace boxrepair {

using nlohmann::json;

ParseError::ParseError(const std::string &source, std::size_t line, const std::string &what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line)
{
}

namespace {

std::string trim(const std::string &s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string &token, double &out)
{
    const std::string t = trim(token);
    if (t.empty())
        return false;
    char *end = nullptr;
    errno = 0;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size() && errno != ERANGE && std::isfinite(out);
}

/// Non-comment, non-blank lines of an NNet file, split into numeric fields.
class NnetReader {
public:
    NnetReader(std::istream &in, std::string source) : in_(in), source_(std::move(source)) {}

    std::vector<double> values(std::size_t expected, const std::string &section)
    {
        std::string line;
        while (true) {
            if (!std::getline(in_, line))
                throw ParseError(source_, line_no_, "unexpected end of file while reading " + section);
            ++line_no_;
            const std::string t = trim(line);
            if (t.empty() || t.rfind("//", 0) == 0)
                continue;
            break;
        }
        std::vector<double> out;
        std::stringstream ss(line);
        std::string token;
        while (std::getline(ss, token, ',')) {
            if (trim(token).empty())
                continue;
            double v = 0.0;
            if (!parse_double(token, v))
                throw ParseError(source_, line_no_, "non-numeric token '" + trim(token) + "' in " + section);
            out.push_back(v);
        }
        if (out.size() < expected)
            throw ParseError(source_, line_no_,
                             section + ": expected " + std::to_string(expected) + " values, found " +
                                 std::to_string(out.size()));
        out.resize(expected);
        return out;
    }

    std::size_t line() const { return line_no_; }
    const std::string &source() const { return source_; }

private:
    std::istream &in_;
    std::string source_;
    std::size_t line_no_ = 0;
};

std::size_t as_count(double v, const NnetReader &r, const std::string &what)
{
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e7)
        throw ParseError(r.source(), r.line(), "malformed header: " + what + " must be a positive integer");
    return static_cast<std::size_t>(v);
}

void write_row(std::ostream &out, std::span<const double> values)
{
    for (double v : values)
        out << v << ',';
    out << '\n';
}

json vector_json(std::span<const double> v) { return json(std::vector<double>(v.begin(), v.end())); }

Vector vector_from(const json &j, const std::string &what)
{
    if (!j.is_array())
        throw ParseError(what + ": expected an array of numbers");
    Vector out;
    out.reserve(j.size());
    for (const json &e : j) {
        if (!e.is_number())
            throw ParseError(what + ": expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

const json &field(const json &j, const char *key, const std::string &where)
{
    if (!j.is_object() || !j.contains(key))
        throw ParseError(where + ": missing field '" + key + "'");
    return j.at(key);
}

json read_json_file(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_text(const std::filesystem::path &path, const std::string &text)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
}

} // namespace

Network parse_nnet(std::istream &in, const std::string &source)
{
    NnetReader r(in, source);
    const auto header = r.values(4, "header (layer count, input size, output size, max layer size)");
    const std::size_t num_layers = as_count(header[0], r, "layer count");
    const std::size_t input_size = as_count(header[1], r, "input size");
    const std::size_t output_size = as_count(header[2], r, "output size");

    const auto sizes_raw = r.values(num_layers + 1, "layer sizes");
    std::vector<std::size_t> sizes;
    for (double v : sizes_raw)
        sizes.push_back(as_count(v, r, "layer size"));
    if (sizes.front() != input_size || sizes.back() != output_size)
        throw ParseError(source, r.line(), "dimension mismatch: layer sizes disagree with input/output sizes");

    r.values(1, "symmetric flag");
    Normalization norm;
    norm.input_min = r.values(input_size, "input minimums");
    norm.input_max = r.values(input_size, "input maximums");
    const auto means = r.values(input_size + 1, "normalization means");
    const auto ranges = r.values(input_size + 1, "normalization ranges");
    norm.input_mean.assign(means.begin(), means.begin() + static_cast<long>(input_size));
    norm.input_range.assign(ranges.begin(), ranges.begin() + static_cast<long>(input_size));
    norm.output_mean.assign(output_size, means.back());
    norm.output_range.assign(output_size, ranges.back());
    for (double v : ranges) {
        if (v == 0.0)
            throw ParseError(source, r.line(), "normalization range of zero");
    }

    std::vector<Layer> layers;
    for (std::size_t li = 0; li < num_layers; ++li) {
        const std::size_t rows = sizes[li + 1], cols = sizes[li];
        Layer layer;
        layer.weights = Matrix(rows, cols);
        const std::string where = "layer " + std::to_string(li);
        for (std::size_t i = 0; i < rows; ++i) {
            const auto row = r.values(cols, where + " weights row " + std::to_string(i));
            std::copy(row.begin(), row.end(), layer.weights.row(i).begin());
        }
        layer.bias.resize(rows);
        for (std::size_t i = 0; i < rows; ++i)
            layer.bias[i] = r.values(1, where + " biases")[0];
        layer.activation = li + 1 == num_layers ? Activation::identity() : Activation::relu();
        layers.push_back(std::move(layer));
    }
    if (layers.size() < 2)
        throw ParseError(source, r.line(), "need at least two layers");
    const std::size_t split = Network::default_split(layers.size());
    return Network(std::move(layers), split, std::move(norm));
}

Network parse_nnet(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open " + path.string());
    return parse_nnet(in, path.string());
}

void write_nnet(const Network &net, std::ostream &out)
{
    for (std::size_t i = 0; i + 1 < net.num_layers(); ++i) {
        if (net.layer(i).activation.kind != ActivationKind::ReLU)
            throw std::invalid_argument("write_nnet: NNet hidden layers must be ReLU");
    }
    const Normalization &norm = net.normalization();
    const std::size_t m = net.input_dim(), n = net.output_dim();
    if (norm.has_output()) {
        const bool shared = std::all_of(norm.output_mean.begin(), norm.output_mean.end(),
                                        [&](double v) { return v == norm.output_mean[0]; }) &&
                            std::all_of(norm.output_range.begin(), norm.output_range.end(),
                                        [&](double v) { return v == norm.output_range[0]; });
        if (!shared)
            throw std::invalid_argument("write_nnet: NNet stores one output mean/range for all outputs");
    }

    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << "// Dense ReLU network written by boxrepair\n";
    std::size_t widest = m;
    for (const Layer &l : net.layers())
        widest = std::max(widest, l.out_dim());
    out << net.num_layers() << ',' << m << ',' << n << ',' << widest << ",\n";
    out << m << ',';
    for (const Layer &l : net.layers())
        out << l.out_dim() << ',';
    out << "\n0,\n";

    const double inf = std::numeric_limits<double>::max();
    write_row(out, norm.input_min.empty() ? Vector(m, -inf) : norm.input_min);
    write_row(out, norm.input_max.empty() ? Vector(m, inf) : norm.input_max);
    Vector means = norm.has_input() ? norm.input_mean : Vector(m, 0.0);
    Vector ranges = norm.has_input() ? norm.input_range : Vector(m, 1.0);
    means.push_back(norm.has_output() ? norm.output_mean[0] : 0.0);
    ranges.push_back(norm.has_output() ? norm.output_range[0] : 1.0);
    write_row(out, means);
    write_row(out, ranges);

    for (const Layer &l : net.layers()) {
        for (std::size_t i = 0; i < l.out_dim(); ++i)
            write_row(out, l.weights.row(i));
        for (double b : l.bias)
            out << b << ",\n";
    }
}

void write_nnet(const Network &net, const std::filesystem::path &path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    write_nnet(net, out);
}

json network_to_json(const Network &net)
{
    json j;
    j["format"] = "boxrepair-network";
    j["version"] = 1;
    j["split"] = net.split();
    json layers = json::array();
    for (const Layer &l : net.layers()) {
        json lj;
        lj["in"] = l.in_dim();
        lj["out"] = l.out_dim();
        lj["activation"] = l.activation.name();
        if (l.activation.kind == ActivationKind::LeakyReLU)
            lj["slope"] = l.activation.slope;
        lj["weights"] = vector_json(l.weights.data());
        lj["bias"] = vector_json(l.bias);
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    const Normalization &norm = net.normalization();
    if (norm.has_input() || norm.has_output()) {
        json nj;
        if (norm.has_input()) {
            nj["input_mean"] = vector_json(norm.input_mean);
            nj["input_range"] = vector_json(norm.input_range);
        }
        if (norm.has_output()) {
            nj["output_mean"] = vector_json(norm.output_mean);
            nj["output_range"] = vector_json(norm.output_range);
        }
        if (!norm.input_min.empty()) {
            nj["input_min"] = vector_json(norm.input_min);
            nj["input_max"] = vector_json(norm.input_max);
        }
        j["normalization"] = std::move(nj);
    }
    return j;
}

Network network_from_json(const json &j)
{
    const std::string where = "network";
    if (j.value("format", std::string()) != "boxrepair-network")
        throw ParseError(where + ": not a boxrepair network file");
    std::vector<Layer> layers;
    const json &lj = field(j, "layers", where);
    if (!lj.is_array())
        throw ParseError(where + ": 'layers' must be an array");
    for (std::size_t i = 0; i < lj.size(); ++i) {
        const std::string lw = where + " layer " + std::to_string(i);
        const json &e = lj[i];
        const auto rows = field(e, "out", lw).get<std::size_t>();
        const auto cols = field(e, "in", lw).get<std::size_t>();
        Vector weights = vector_from(field(e, "weights", lw), lw + " weights");
        if (weights.size() != rows * cols)
            throw ParseError(lw + ": weights length does not match in*out");
        Layer layer;
        layer.weights = Matrix(rows, cols, std::move(weights));
        layer.bias = vector_from(field(e, "bias", lw), lw + " bias");
        try {
            layer.activation =
                Activation::from_name(field(e, "activation", lw).get<std::string>(), e.value("slope", 0.0));
        } catch (const std::invalid_argument &err) {
            throw ParseError(lw + ": " + err.what());
        }
        layers.push_back(std::move(layer));
    }
    Normalization norm;
    if (j.contains("normalization")) {
        const json &nj = j.at("normalization");
        auto opt = [&](const char *key) { return nj.contains(key) ? vector_from(nj.at(key), key) : Vector{}; };
        norm.input_mean = opt("input_mean");
        norm.input_range = opt("input_range");
        norm.output_mean = opt("output_mean");
        norm.output_range = opt("output_range");
        norm.input_min = opt("input_min");
        norm.input_max = opt("input_max");
    }
    const std::size_t split =
        j.contains("split") ? j.at("split").get<std::size_t>() : Network::default_split(layers.size());
    try {
        return Network(std::move(layers), split, std::move(norm));
    } catch (const std::invalid_argument &err) {
        throw ParseError(where + ": " + err.what());
    }
}

void save_network(const Network &net, const std::filesystem::path &path)
{
    write_text(path, network_to_json(net).dump() + "\n");
}

Network load_network(const std::filesystem::path &path, std::optional<std::size_t> split)
{
    Network net;
    try {
        net = path.extension() == ".nnet" ? parse_nnet(path) : network_from_json(read_json_file(path));
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (split && *split != net.split()) {
        try {
            net = net.with_split(*split);
        } catch (const std::invalid_argument &err) {
            throw ParseError(path.string() + ": " + err.what());
        }
    }
    return net;
}

json properties_to_json(const std::vector<Property> &props)
{
    json arr = json::array();
    for (const Property &p : props) {
        json pj;
        pj["label"] = p.label;
        pj["input_lower"] = vector_json(p.input.lower);
        pj["input_upper"] = vector_json(p.input.upper);
        json cons = json::array();
        for (const LinearConstraint &c : p.constraints)
            cons.push_back({{"coeffs", vector_json(c.coeffs)}, {"bias", c.bias}});
        pj["constraints"] = std::move(cons);
        arr.push_back(std::move(pj));
    }
    return json{{"properties", std::move(arr)}};
}

std::vector<Property> properties_from_json(const json &j)
{
    const json &arr = j.is_array() ? j : field(j, "properties", "property file");
    if (!arr.is_array())
        throw ParseError("property file: 'properties' must be an array");
    std::vector<Property> props;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const json &pj = arr[i];
        const std::string where = "property " + std::to_string(i);
        Property p;
        p.label = pj.value("label", "p" + std::to_string(i));
        Vector lo = vector_from(field(pj, "input_lower", where), where + " input_lower");
        Vector hi = vector_from(field(pj, "input_upper", where), where + " input_upper");
        if (lo.size() != hi.size())
            throw ParseError(where + ": input_lower and input_upper differ in length");
        for (std::size_t d = 0; d < lo.size(); ++d) {
            if (!(lo[d] <= hi[d]))
                throw ParseError(where + ": lower > upper at dimension " + std::to_string(d));
        }
        p.input = Box(std::move(lo), std::move(hi));
        const json &cons = field(pj, "constraints", where);
        if (!cons.is_array() || cons.empty())
            throw ParseError(where + ": at least one constraint is required");
        for (const json &cj : cons) {
            LinearConstraint c;
            c.coeffs = vector_from(field(cj, "coeffs", where), where + " coeffs");
            c.bias = cj.value("bias", 0.0);
            if (c.coeffs.size() != cons[0].at("coeffs").size())
                throw ParseError(where + ": constraints disagree on output width");
            p.constraints.push_back(std::move(c));
        }
        props.push_back(std::move(p));
    }
    return props;
}

std::vector<Property> parse_properties(const std::filesystem::path &path)
{
    try {
        return properties_from_json(read_json_file(path));
    } catch (const json::exception &e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const ParseError &e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::vector<Property> parse_properties(const std::filesystem::path &path, const Network &net)
{
    std::vector<Property> props = parse_properties(path);
    for (const Property &p : props) {
        try {
            p.validate(net.input_dim(), net.output_dim());
        } catch (const std::invalid_argument &e) {
            throw ParseError(path.string() + ": " + e.what());
        }
    }
    return props;
}

void save_properties(const std::vector<Property> &props, const std::filesystem::path &path)
{
    write_text(path, properties_to_json(props).dump(1) + "\n");
}

Dataset parse_dataset(std::istream &in, const std::string &source)
{
    Dataset data;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        std::vector<double> values;
        std::stringstream ss(line);
        std::string token;
        while (std::getline(ss, token, ',')) {
            double v = 0.0;
            if (!parse_double(token, v))
                throw ParseError(source, line_no, "non-numeric field '" + trim(token) + "'");
            values.push_back(v);
        }
        if (values.size() < 2)
            throw ParseError(source, line_no, "need at least one feature and a label");
        if (width == 0)
            width = values.size();
        else if (values.size() != width)
            throw ParseError(source, line_no, "row has " + std::to_string(values.size()) + " fields, expected " +
                                                  std::to_string(width));
        const double label = values.back();
        if (label < 0.0 || label != std::floor(label))
            throw ParseError(source, line_no, "label must be a non-negative integer");
        values.pop_back();
        data.inputs.push_back(std::move(values));
        data.labels.push_back(static_cast<std::size_t>(label));
    }
    return data;
}

Dataset load_dataset(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open " + path.string());
    return parse_dataset(in, path.string());
}

void save_dataset(const Dataset &data, const std::filesystem::path &path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.inputs[i])
            out << v << ',';
        out << data.labels[i] << '\n';
    }
}

double accuracy(const Network &net, const Dataset &data)
{
    if (data.empty())
        throw std::invalid_argument("accuracy: empty dataset");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.labels[i] >= net.output_dim())
            throw std::invalid_argument("accuracy: label " + std::to_string(data.labels[i]) + " out of range");
        if (net.predict(data.inputs[i]) == data.labels[i])
            ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

bool property_holds(const Network &net, const Property &prop, BoundsMode mode)
{
    if (prop.is_pointwise())
        return net.satisfies(prop.input.lower, prop);
    return linear_lower_bounds(net.whole(), prop.input, prop.constraints, mode).verified();
}

double satisfaction_rate(const Network &net, const std::vector<Property> &props, BoundsMode mode)
{
    if (props.empty())
        throw std::invalid_argument("satisfaction_rate: no properties");
    const auto held = std::count_if(props.begin(), props.end(),
                                    [&](const Property &p) { return property_holds(net, p, mode); });
    return static_cast<double>(held) / static_cast<double>(props.size());
}

Metrics eval_metrics(const Network &net, const Dataset &test, const std::vector<Property> &props,
                     const std::vector<Property> &gene_props)
{
    Metrics m;
    m.acc = accuracy(net, test);
    if (!props.empty())
        m.psr = satisfaction_rate(net, props);
    if (!gene_props.empty())
        m.gene = satisfaction_rate(net, gene_props);
    return m;
}

json repair_report(const RepairOutcome &outcome, const std::string &mode, bool include_timing)
{
    json j;
    j["mode"] = mode;
    j["status"] = to_string(outcome.status);
    if (!outcome.diagnostic.empty())
        j["diagnostic"] = outcome.diagnostic;
    const RepairStats &s = outcome.stats;
    j["optimizer_steps"] = s.optimizer_steps;
    j["proxy_shifts"] = s.proxy_shifts;
    j["tasks"] = outcome.tasks.size();
    j["tasks_within_radius"] = s.tasks_within_radius;
    if (mode == "region") {
        j["final_properties"] = s.final_properties;
        j["refinements"] = s.refinements;
        json rounds = json::array();
        for (const RoundStats &r : s.rounds) {
            rounds.push_back({{"properties", r.properties},
                              {"violated", r.violated},
                              {"counterexamples", r.counterexamples},
                              {"new_counterexamples", r.new_counterexamples},
                              {"optimizer_steps", r.optimizer_steps}});
        }
        j["rounds"] = std::move(rounds);
    }
    j["loss"] = s.loss;
    if (include_timing)
        j["wall_time_s"] = s.wall_seconds;
    return j;
}

} // namespace boxrepair
