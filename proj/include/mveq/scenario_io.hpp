#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "mveq/equilibrium_linear_mv.hpp"
#include "mveq/equilibrium_quadratic.hpp"
#include "mveq/scenario.hpp"

namespace mveq {

using Json = nlohmann::ordered_json;

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScenarioFile {
    Scenario scenario;
    std::optional<AdaptedProcess> prices; // optional "prices" block, one row per node
};

// Throws ParseError for malformed documents (including tree structure errors).
// Dimension mismatches that still form a rectangular layout are left to
// validate_scenario.
ScenarioFile parse_scenario(const Json& doc);
ScenarioFile parse_scenario_text(const std::string& text);
ScenarioFile load_scenario_file(const std::string& path);

Json emit_scenario(const Scenario& s, const std::optional<AdaptedProcess>& prices = std::nullopt);

Json matrix_to_json(const Eigen::MatrixXd& m);
Json vector_to_json(const Eigen::VectorXd& v);
// rows of inner nodes only, tagged with the node id
Json strategy_to_json(const FiltrationTree& tree, const PredictableProcess& theta);

Json conditions_to_json(const NecessaryConditions& nc);
Json report_to_json(const Scenario& s, const EquilibriumReport& r);
Json report_to_json(const Scenario& s, const MvEquilibriumReport& r);

// Flat CSV with columns quantity,time,node,asset,value. Scalars leave
// time/node/asset empty.
class CsvWriter {
public:
    void scalar(const std::string& quantity, double value);
    void scalar(const std::string& quantity, const std::string& value);
    void node_matrix(const std::string& quantity, const FiltrationTree& tree, const Eigen::MatrixXd& m,
                     bool inner_only = false);
    std::string str() const;

private:
    std::string body_;
};

std::string format_double(double x);

std::string report_to_csv(const Scenario& s, const EquilibriumReport& r);
std::string report_to_csv(const Scenario& s, const MvEquilibriumReport& r);

} // namespace mveq
