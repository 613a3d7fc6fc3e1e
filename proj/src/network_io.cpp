#include "mcqn/network_io.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "mcqn/errors.hpp"

namespace mcqn {
namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::set<std::string>& required, const std::string& where) {
  if (!obj.is_object()) throw_error(errc::parse_error, where + " must be an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key))
      throw_error(errc::parse_error, "unknown key '" + key + "' in " + where);
  for (const auto& key : required)
    if (!obj.count(key))
      throw_error(errc::parse_error, "missing key '" + key + "' in " + where);
}

double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw_error(errc::parse_error, where + " must be a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw_error(errc::parse_error, where + " must be an integer");
  return v.get<int>();
}

Eigen::VectorXd as_vector(const json& v, int n, const std::string& where) {
  if (!v.is_array() || static_cast<int>(v.size()) != n)
    throw_error(errc::parse_error, where + " must be an array of length " + std::to_string(n));
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = as_number(v[i], where);
  return out;
}

}  // namespace

network_spec parse_network(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw_error(errc::parse_error, e.what());
  }
  require_keys(root, {"stations", "classes", "routing", "arrivals", "heavy_traffic"},
               {"stations", "classes", "routing", "arrivals"}, "network");

  network_spec net;
  net.num_stations = as_int(root["stations"], "stations");
  const auto& classes = root["classes"];
  if (!classes.is_array() || classes.empty())
    throw_error(errc::parse_error, "classes must be a nonempty array");
  const int K = static_cast<int>(classes.size());

  net.station_of.resize(K);
  net.priority_rank.resize(K);
  net.mean_service.resize(K);
  net.arrival_rate = Eigen::VectorXd::Zero(K);
  net.service_dist.reserve(K);
  net.interarrival_dist.assign(K, distribution_model::exponential());
  for (int k = 0; k < K; ++k) {
    const auto& c = classes[k];
    const std::string where = "classes[" + std::to_string(k) + "]";
    require_keys(c, {"station", "priority_rank", "mean_service", "service_dist"},
                 {"station", "priority_rank", "mean_service", "service_dist"}, where);
    net.station_of[k] = as_int(c["station"], where + ".station") - 1;
    net.priority_rank[k] = as_int(c["priority_rank"], where + ".priority_rank");
    net.mean_service[k] = as_number(c["mean_service"], where + ".mean_service");
    if (!c["service_dist"].is_string())
      throw_error(errc::parse_error, where + ".service_dist must be a string");
    net.service_dist.push_back(distribution_model::parse(c["service_dist"].get<std::string>()));
  }

  const auto& routing = root["routing"];
  if (!routing.is_array() || static_cast<int>(routing.size()) != K)
    throw_error(errc::parse_error, "routing must be a K×K array");
  net.routing.resize(K, K);
  for (int k = 0; k < K; ++k)
    net.routing.row(k) = as_vector(routing[k], K, "routing[" + std::to_string(k) + "]").transpose();

  const auto& arrivals = root["arrivals"];
  if (!arrivals.is_array()) throw_error(errc::parse_error, "arrivals must be an array");
  for (size_t i = 0; i < arrivals.size(); ++i) {
    const auto& a = arrivals[i];
    const std::string where = "arrivals[" + std::to_string(i) + "]";
    require_keys(a, {"class", "rate", "dist"}, {"class", "rate", "dist"}, where);
    const int k = as_int(a["class"], where + ".class") - 1;
    if (k < 0 || k >= K) throw_error(errc::parse_error, where + ".class out of range");
    net.arrival_rate[k] = as_number(a["rate"], where + ".rate");
    if (!a["dist"].is_string()) throw_error(errc::parse_error, where + ".dist must be a string");
    net.interarrival_dist[k] = distribution_model::parse(a["dist"].get<std::string>());
  }

  if (root.count("heavy_traffic")) {
    const auto& ht = root["heavy_traffic"];
    require_keys(ht, {"lambda_star", "m_star"}, {"lambda_star", "m_star"}, "heavy_traffic");
    ht_directions dir;
    dir.lambda_star = as_vector(ht["lambda_star"], K, "heavy_traffic.lambda_star");
    dir.m_star = as_vector(ht["m_star"], K, "heavy_traffic.m_star");
    net.heavy_traffic = dir;
  }

  validate_spec(net);
  return net;
}

network_spec load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_error(errc::parse_error, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str());
}

std::string write_network(const network_spec& net) {
  json root;
  root["stations"] = net.num_stations;
  json classes = json::array();
  for (int k = 0; k < net.num_classes(); ++k) {
    classes.push_back({{"station", net.station_of[k] + 1},
                       {"priority_rank", net.priority_rank[k]},
                       {"mean_service", net.mean_service[k]},
                       {"service_dist", net.service_dist[k].to_string()}});
  }
  root["classes"] = classes;
  json routing = json::array();
  for (int k = 0; k < net.num_classes(); ++k) {
    json row = json::array();
    for (int l = 0; l < net.num_classes(); ++l) row.push_back(net.routing(k, l));
    routing.push_back(row);
  }
  root["routing"] = routing;
  json arrivals = json::array();
  for (int k = 0; k < net.num_classes(); ++k)
    if (net.arrival_rate[k] > 0)
      arrivals.push_back({{"class", k + 1},
                          {"rate", net.arrival_rate[k]},
                          {"dist", net.interarrival_dist[k].to_string()}});
  root["arrivals"] = arrivals;
  if (net.heavy_traffic) {
    json ls = json::array(), ms = json::array();
    for (int k = 0; k < net.num_classes(); ++k) {
      ls.push_back(net.heavy_traffic->lambda_star[k]);
      ms.push_back(net.heavy_traffic->m_star[k]);
    }
    root["heavy_traffic"] = {{"lambda_star", ls}, {"m_star", ms}};
  }
  return root.dump(2) + "\n";
}

void save_network(const network_spec& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_error(errc::parse_error, "cannot write '" + path + "'");
  out << write_network(net);
}

}  // namespace mcqn
