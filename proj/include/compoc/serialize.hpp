#pragma once

#include <json.hpp>
#include <string>

#include "compoc/compgraph.hpp"
#include "compoc/ocp.hpp"
#include "compoc/shallow.hpp"
#include "compoc/synth.hpp"

namespace compoc {

using nlohmann::json;

// All numbers cross the JSON boundary as strings: decimal shortest-round-trip
// for model parameters, hex-float for trained surrogate weights. Parse errors
// surface as ConfigError.

json vec_dec(const Vec& v);
Vec vec_from_dec(const json& j);
json mat_dec(const Mat& m);
Mat mat_from_dec(const json& j);
json vec_hex(const Vec& v);
Vec vec_from_hex(const json& j);
json mat_hex(const Mat& m);
Mat mat_from_hex(const json& j);

json graph_to_json(const CompGraph& g);
CompGraph graph_from_json(const json& j);

json instance_to_json(const OcpInstance& inst);
OcpInstance instance_from_json(const json& j);

json shallow_to_json(const ShallowNet& net);
ShallowNet shallow_from_json(const json& j);

json surrogate_to_json(const SurrogateNet& s);
SurrogateNet surrogate_from_json(const json& j);

json controller_to_json(const UnrolledController& c);
UnrolledController controller_from_json(const json& j);

json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const json& j);

}  // namespace compoc
