#pragma once

#include "boxrepair/network.hpp"
#include "boxrepair/property.hpp"
#include "boxrepair/repair.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace boxrepair {

/// Malformed input file; the message carries the source name and line when known.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string &source, std::size_t line, const std::string &what);
    explicit ParseError(const std::string &what) : std::runtime_error(what) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_ = 0;
};

// NNet text format: "//" comment header, then sizes, the unused symmetric flag, input
// min/max, means/ranges (input entries then one shared output entry), and per layer the
// weight rows followed by one bias per line. Hidden layers are ReLU, the output is linear.
Network parse_nnet(std::istream &in, const std::string &source = "<nnet>");
Network parse_nnet(const std::filesystem::path &path);
void write_nnet(const Network &net, std::ostream &out);
void write_nnet(const Network &net, const std::filesystem::path &path);

nlohmann::json network_to_json(const Network &net);
Network network_from_json(const nlohmann::json &j);
void save_network(const Network &net, const std::filesystem::path &path);
/// Dispatches on the extension: ".nnet" is NNet text, anything else the JSON format.
/// A split override replaces the stored (or default) split.
Network load_network(const std::filesystem::path &path, std::optional<std::size_t> split = std::nullopt);

nlohmann::json properties_to_json(const std::vector<Property> &props);
std::vector<Property> properties_from_json(const nlohmann::json &j);
std::vector<Property> parse_properties(const std::filesystem::path &path);
/// Also checks every property against the network's input and output widths.
std::vector<Property> parse_properties(const std::filesystem::path &path, const Network &net);
void save_properties(const std::vector<Property> &props, const std::filesystem::path &path);

struct Dataset {
    std::vector<Vector> inputs;
    std::vector<std::size_t> labels;

    std::size_t size() const { return inputs.size(); }
    bool empty() const { return inputs.empty(); }
};

/// Headerless CSV, label in the last column.
Dataset parse_dataset(std::istream &in, const std::string &source = "<csv>");
Dataset load_dataset(const std::filesystem::path &path);
void save_dataset(const Dataset &data, const std::filesystem::path &path);

struct Metrics {
    double acc = 0.0;
    std::optional<double> psr;
    std::optional<double> gene;
};

double accuracy(const Network &net, const Dataset &data);

/// Point properties are checked by evaluation; box properties must verify under the bounds.
bool property_holds(const Network &net, const Property &prop, BoundsMode mode = BoundsMode::Backward);
double satisfaction_rate(const Network &net, const std::vector<Property> &props,
                         BoundsMode mode = BoundsMode::Backward);

Metrics eval_metrics(const Network &net, const Dataset &test, const std::vector<Property> &props = {},
                     const std::vector<Property> &gene_props = {});

/// Machine-readable summary of a repair run. Wall time is included only on request so
/// that reports from identical runs compare byte-for-byte.
nlohmann::json repair_report(const RepairOutcome &outcome, const std::string &mode, bool include_timing);

} // namespace boxrepair
