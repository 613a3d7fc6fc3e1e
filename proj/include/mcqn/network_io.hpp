#pragma once

#include <string>

#include "mcqn/network.hpp"

namespace mcqn {

// File format (JSON):
//   {
//     "stations": <J>,
//     "classes": [ {"station": 1-based, "priority_rank": int (1 = served
//         first), "mean_service": >0, "service_dist": "<spec>"}, ... ],
//     "routing": K×K row-major array of arrays,
//     "arrivals": [ {"class": 1-based, "rate": >0, "dist": "<spec>"}, ... ],
//     "heavy_traffic": {"lambda_star": [K], "m_star": [K]}   // optional
//   }
// Distribution specs follow distribution_model::parse.  Unknown keys anywhere
// are rejected.  Parsed networks are validated before being returned.
[[nodiscard]] network_spec parse_network(const std::string& text);
[[nodiscard]] network_spec load_network(const std::string& path);
[[nodiscard]] std::string write_network(const network_spec& net);
void save_network(const network_spec& net, const std::string& path);

}  // namespace mcqn
