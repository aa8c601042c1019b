#pragma once
// Area graphs: consecutive time periods (path graph, optionally with a set of
// "conflict" periods) or areal adjacency (optionally partitioned into
// countries). Indices are 0-based internally; all file formats are 1-based.

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "agmrf/io.hpp"

namespace agmrf {

enum class GraphKind { Temporal, Areal };

struct AreaGraph {
  GraphKind kind = GraphKind::Temporal;
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // 0-based, first < second, sorted
  std::vector<int> conflict;               // 0-based period indices, sorted (temporal)
  std::vector<int> country;                // 0-based per-area labels (areal; empty if none)
  int n_countries = 0;
  int start_year = 0;     // calendar year of period 0; 0 if periods are unlabeled
  int n_forecast = 0;     // trailing periods with no data expected (reporting only)

  bool in_conflict(int i) const {
    return std::binary_search(conflict.begin(), conflict.end(), i);
  }
};

inline AreaGraph temporal_graph(int n_periods, std::vector<int> conflict0 = {},
                                int start_year = 0, int n_forecast = 0) {
  if (n_periods < 1) throw std::invalid_argument("temporal graph needs at least 1 period");
  std::sort(conflict0.begin(), conflict0.end());
  conflict0.erase(std::unique(conflict0.begin(), conflict0.end()), conflict0.end());
  for (int c : conflict0)
    if (c < 0 || c >= n_periods)
      throw std::invalid_argument("conflict index " + std::to_string(c + 1) +
                                  " outside 1.." + std::to_string(n_periods));
  AreaGraph g;
  g.kind = GraphKind::Temporal;
  g.n = n_periods;
  g.conflict = std::move(conflict0);
  g.start_year = start_year;
  g.n_forecast = n_forecast;
  for (int i = 0; i + 1 < n_periods; ++i) g.edges.emplace_back(i, i + 1);
  return g;
}

// Temporal config JSON: {"n_periods":31,"start_year":1985,
//   "conflict_years":[1993,...,1999],"forecast_until":2019}
// forecast_until (optional) appends periods beyond the data window.
inline AreaGraph temporal_graph_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("temporal config is not valid JSON: ") + e.what());
  }
  if (!j.contains("n_periods")) throw std::invalid_argument("temporal config missing n_periods");
  int n = j["n_periods"].get<int>();
  int start = j.value("start_year", 0);
  int n_total = n, n_forecast = 0;
  if (j.contains("forecast_until")) {
    if (start == 0) throw std::invalid_argument("forecast_until requires start_year");
    int until = j["forecast_until"].get<int>();
    int last_data = start + n - 1;
    if (until < last_data)
      throw std::invalid_argument("forecast_until precedes the data window");
    n_forecast = until - last_data;
    n_total = n + n_forecast;
  }
  std::vector<int> conf;
  if (j.contains("conflict_years")) {
    for (const auto& y : j["conflict_years"]) {
      int yy = y.get<int>();
      if (start != 0) {
        if (yy < start || yy >= start + n_total)
          throw std::invalid_argument("conflict year " + std::to_string(yy) + " outside the period window");
        conf.push_back(yy - start);
      } else {
        conf.push_back(yy - 1);  // unlabeled periods: entries are 1-based indices
      }
    }
  }
  return temporal_graph(n_total, std::move(conf), start, n_forecast);
}

namespace detail {
struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) {
    while (p[x] != x) x = p[x] = p[p[x]];
    return x;
  }
  void unite(int a, int b) { p[find(a)] = find(b); }
  int components() {
    std::set<int> roots;
    for (int i = 0; i < static_cast<int>(p.size()); ++i) roots.insert(find(i));
    return static_cast<int>(roots.size());
  }
};
}  // namespace detail

inline AreaGraph areal_graph(int n, std::vector<std::pair<int, int>> edges) {
  if (n < 1) throw std::invalid_argument("areal graph needs at least 1 area");
  for (auto& e : edges) {
    if (e.first == e.second) throw std::invalid_argument("self loop on area " + std::to_string(e.first + 1));
    if (e.first > e.second) std::swap(e.first, e.second);
    if (e.first < 0 || e.second >= n) throw std::invalid_argument("edge endpoint outside 1..n");
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw std::invalid_argument("duplicate edge in areal graph");
  AreaGraph g;
  g.kind = GraphKind::Areal;
  g.n = n;
  g.edges = std::move(edges);
  return g;
}

// Adjacency document: one line per area, "<area_id>: <neighbor> <neighbor> ...",
// 1-based ids, ids contiguous 1..N, symmetric neighbor lists.
inline AreaGraph areal_graph_from_adjacency(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::map<int, std::vector<int>> adj;
  int max_id = 0;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto colon = line.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("adjacency line missing ':': " + line);
    int id = static_cast<int>(parse_long(line.substr(0, colon), "adjacency area id"));
    if (adj.count(id)) throw std::invalid_argument("area " + std::to_string(id) + " listed twice");
    std::istringstream rest(line.substr(colon + 1));
    std::vector<int> nb;
    std::string tok;
    while (rest >> tok) nb.push_back(static_cast<int>(parse_long(tok, "adjacency neighbor")));
    adj[id] = nb;
    max_id = std::max(max_id, id);
  }
  if (adj.empty()) throw std::invalid_argument("adjacency document has no areas");
  int n = static_cast<int>(adj.size());
  if (max_id != n) throw std::invalid_argument("area ids must be contiguous 1..N");
  for (int i = 1; i <= n; ++i)
    if (!adj.count(i)) throw std::invalid_argument("missing area " + std::to_string(i));
  std::vector<std::pair<int, int>> edges;
  for (auto& [id, nbrs] : adj) {
    std::set<int> seen;
    for (int v : nbrs) {
      if (v < 1 || v > n) throw std::invalid_argument("neighbor id outside 1..N");
      if (v == id) throw std::invalid_argument("self loop on area " + std::to_string(id));
      if (!seen.insert(v).second)
        throw std::invalid_argument("duplicate neighbor in list of area " + std::to_string(id));
      const auto& back = adj[v];
      if (std::find(back.begin(), back.end(), id) == back.end())
        throw std::invalid_argument("asymmetric adjacency between " + std::to_string(id) + " and " +
                                    std::to_string(v));
      if (id < v) edges.emplace_back(id - 1, v - 1);
    }
  }
  return areal_graph(n, std::move(edges));
}

inline std::string to_adjacency(const AreaGraph& g) {
  std::vector<std::vector<int>> nb(g.n);
  for (auto& [a, b] : g.edges) {
    nb[a].push_back(b + 1);
    nb[b].push_back(a + 1);
  }
  std::ostringstream out;
  for (int i = 0; i < g.n; ++i) {
    std::sort(nb[i].begin(), nb[i].end());
    out << (i + 1) << ":";
    for (int v : nb[i]) out << ' ' << v;
    out << '\n';
  }
  return out.str();
}

// Country membership CSV: header "area_id,country_id"; labels must cover all
// areas exactly once with contiguous country ids 1..M.
inline void attach_countries_csv(AreaGraph& g, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("country CSV is empty");
  std::vector<int> country(g.n, -1);
  int max_label = 0;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 2) throw std::invalid_argument("country CSV expects 2 columns: " + line);
    int a = static_cast<int>(parse_long(cells[0], "country CSV area_id"));
    int c = static_cast<int>(parse_long(cells[1], "country CSV country_id"));
    if (a < 1 || a > g.n) throw std::invalid_argument("country CSV area outside 1..N");
    if (country[a - 1] != -1) throw std::invalid_argument("area " + std::to_string(a) + " labeled twice");
    if (c < 1) throw std::invalid_argument("country ids are 1-based");
    country[a - 1] = c - 1;
    max_label = std::max(max_label, c);
  }
  std::vector<char> present(max_label, 0);
  for (int i = 0; i < g.n; ++i) {
    if (country[i] == -1)
      throw std::invalid_argument("area " + std::to_string(i + 1) + " has no country label");
    present[country[i]] = 1;
  }
  for (int c = 0; c < max_label; ++c)
    if (!present[c])
      throw std::invalid_argument("country ids must be contiguous 1..M (missing " + std::to_string(c + 1) + ")");
  g.country = std::move(country);
  g.n_countries = max_label;
}

inline std::string countries_to_csv(const AreaGraph& g) {
  std::ostringstream out;
  out << "area_id,country_id\n";
  for (int i = 0; i < g.n; ++i) out << (i + 1) << ',' << (g.country[i] + 1) << '\n';
  return out.str();
}

// Edges whose difference belongs to the reference (non-shock) class: for
// temporal graphs the transitions not touching a conflict period, for
// partitioned areal graphs the within-country pairs. Without a conflict set or
// country labels every edge is reference-class.
inline bool edge_in_reference_class(const AreaGraph& g, int a, int b) {
  if (g.kind == GraphKind::Temporal && !g.conflict.empty())
    return !g.in_conflict(a) && !g.in_conflict(b);
  if (g.kind == GraphKind::Areal && !g.country.empty()) return g.country[a] == g.country[b];
  return true;
}

struct ConnectivityReport {
  bool connected = false;
  int n_components = 0;
  int r1_components = 0;  // components of the reference-class subgraph (isolated areas count)
  int r1_edges = 0;
  int r2_edges = 0;
};

inline ConnectivityReport connectivity_report(const AreaGraph& g) {
  detail::UnionFind full(g.n), ref(g.n);
  ConnectivityReport rep;
  for (auto& [a, b] : g.edges) {
    full.unite(a, b);
    if (edge_in_reference_class(g, a, b)) {
      ref.unite(a, b);
      ++rep.r1_edges;
    } else {
      ++rep.r2_edges;
    }
  }
  rep.n_components = full.components();
  rep.connected = rep.n_components == 1;
  rep.r1_components = ref.components();
  return rep;
}

}  // namespace agmrf
