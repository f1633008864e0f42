#pragma once

// JSON documents for pmfs and channels:
//   FinitePmf: {"axes":[{"name":"X","size":2},...], "probs":[...row-major...]}
//   Channel:   {"given":[...input axes...], "axes":[...output axes...], "probs":[...]}

#include <json.hpp>

#include "rdp/prob_core.hpp"

namespace rdp {

nlohmann::json to_json(const FinitePmf& p);
nlohmann::json to_json(const Channel& ch);
nlohmann::json to_json(const AxisList& axes);

FinitePmf pmf_from_json(const nlohmann::json& j);
Channel channel_from_json(const nlohmann::json& j);
AxisList axes_from_json(const nlohmann::json& j);

}  // namespace rdp
