#include "rdp/pmf_json.hpp"

#include "rdp/errors.hpp"

namespace rdp {

using nlohmann::json;

json to_json(const AxisList& axes) {
  json arr = json::array();
  for (const auto& a : axes) arr.push_back({{"name", a.name}, {"size", a.size}});
  return arr;
}

json to_json(const FinitePmf& p) {
  return {{"axes", to_json(p.axes())}, {"probs", std::vector<double>(p.probs().begin(), p.probs().end())}};
}

json to_json(const Channel& ch) {
  return {{"given", to_json(ch.inputs())},
          {"axes", to_json(ch.outputs())},
          {"probs", std::vector<double>(ch.probs().begin(), ch.probs().end())}};
}

AxisList axes_from_json(const json& j) {
  if (!j.is_array()) throw_argument("axes must be an array");
  AxisList axes;
  for (const auto& a : j) {
    if (!a.is_object() || !a.contains("name") || !a.contains("size")) {
      throw_argument("each axis needs \"name\" and \"size\"");
    }
    if (!a["name"].is_string() || !a["size"].is_number_unsigned()) {
      throw_argument("axis name must be a string and size a positive integer");
    }
    axes.push_back(Axis{a["name"].get<std::string>(), a["size"].get<std::size_t>()});
  }
  return axes;
}

namespace {

std::vector<double> probs_from_json(const json& j) {
  if (!j.contains("probs") || !j["probs"].is_array()) throw_argument("missing \"probs\" array");
  std::vector<double> probs;
  for (const auto& v : j["probs"]) {
    if (!v.is_number()) throw_argument("\"probs\" entries must be numbers");
    probs.push_back(v.get<double>());
  }
  return probs;
}

}  // namespace

FinitePmf pmf_from_json(const json& j) {
  if (!j.is_object() || !j.contains("axes")) throw_argument("pmf document needs \"axes\" and \"probs\"");
  return FinitePmf(axes_from_json(j["axes"]), probs_from_json(j));
}

Channel channel_from_json(const json& j) {
  if (!j.is_object() || !j.contains("axes") || !j.contains("given")) {
    throw_argument("channel document needs \"given\", \"axes\" and \"probs\"");
  }
  return Channel(axes_from_json(j["given"]), axes_from_json(j["axes"]), probs_from_json(j));
}

}  // namespace rdp
