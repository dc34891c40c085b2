#include "txflow/case_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

#include "txflow/error.hpp"

namespace txflow {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string strip_comments(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_comment = false;
  bool in_string = false;
  for (char c : text) {
    if (c == '\n') {
      in_comment = false;
      in_string = false;
      out.push_back(c);
      continue;
    }
    if (in_comment) continue;
    if (c == '\'') in_string = !in_string;
    if (c == '%' && !in_string) {
      in_comment = true;
      continue;
    }
    out.push_back(c);
  }
  return out;
}

// Position just after "mpc.<name>" followed by optional blanks and '='.
std::optional<std::size_t> find_assignment(const std::string& text, std::string_view name) {
  const std::string key = "mpc." + std::string(name);
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    std::size_t p = pos + key.size();
    const bool word_end = p >= text.size() || !(std::isalnum(static_cast<unsigned char>(text[p])) || text[p] == '_');
    while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) ++p;
    if (word_end && p < text.size() && text[p] == '=') return p + 1;
    pos += key.size();
  }
  return std::nullopt;
}

std::optional<double> read_scalar(const std::string& text, std::string_view name) {
  auto at = find_assignment(text, name);
  if (!at) return std::nullopt;
  const char* begin = text.c_str() + *at;
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin) throw Error(ErrorCode::MalformedTable, "mpc." + std::string(name) + " is not a number");
  return v;
}

using Table = std::vector<std::vector<double>>;

std::optional<Table> read_table(const std::string& text, std::string_view name, std::size_t min_cols) {
  auto at = find_assignment(text, name);
  if (!at) return std::nullopt;
  const std::size_t open = text.find('[', *at);
  const std::size_t close = text.find(']', *at);
  if (open == std::string::npos || close == std::string::npos || close < open) {
    throw Error(ErrorCode::MalformedTable, "mpc." + std::string(name) + " is not a bracketed table");
  }
  Table rows;
  std::vector<double> row;
  auto flush = [&] {
    if (row.empty()) return;
    if (row.size() < min_cols) {
      throw Error(ErrorCode::MalformedTable, "mpc." + std::string(name) + " row " +
                                                 std::to_string(rows.size() + 1) + " has " +
                                                 std::to_string(row.size()) + " columns, need " +
                                                 std::to_string(min_cols));
    }
    rows.push_back(std::move(row));
    row.clear();
  };
  const char* p = text.c_str() + open + 1;
  const char* stop = text.c_str() + close;
  while (p < stop) {
    const char c = *p;
    if (c == ';' || c == '\n') {
      flush();
      ++p;
    } else if (c == ' ' || c == '\t' || c == ',' || c == '\r') {
      ++p;
    } else if (c == '.' && p + 2 < stop && p[1] == '.' && p[2] == '.') {
      // Line continuation: the row goes on after the newline.
      p += 3;
      while (p < stop && *p != '\n') ++p;
      if (p < stop) ++p;
    } else {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p || end > stop) {
        throw Error(ErrorCode::MalformedTable,
                    "mpc." + std::string(name) + ": unexpected '" + std::string(1, c) + "'");
      }
      row.push_back(v);
      p = end;
    }
  }
  flush();
  return rows;
}

int as_int(double v) { return static_cast<int>(std::lround(v)); }

// Referential checks shared by both input formats; adds an implicit
// generator to a slack bus that has none in service.
void check_raw(RawCase& raw) {
  std::set<int> ids;
  int slack_count = 0;
  for (const RawBus& b : raw.buses) {
    if (!ids.insert(b.id).second) {
      throw Error(ErrorCode::DuplicateBusId, "bus id " + std::to_string(b.id) + " appears twice");
    }
    if (b.type == 3) ++slack_count;
  }
  if (slack_count == 0) throw Error(ErrorCode::NoSlackBus, "no bus has type 3");
  for (const RawBranch& br : raw.branches) {
    for (int id : {br.from, br.to}) {
      if (!ids.count(id)) {
        throw Error(ErrorCode::UnknownBusReference, "branch references bus " + std::to_string(id));
      }
    }
  }
  for (const RawGen& g : raw.gens) {
    if (!ids.count(g.bus)) {
      throw Error(ErrorCode::UnknownBusReference, "generator references bus " + std::to_string(g.bus));
    }
    if (g.controlled_bus && !ids.count(*g.controlled_bus)) {
      throw Error(ErrorCode::UnknownBusReference,
                  "generator controls unknown bus " + std::to_string(*g.controlled_bus));
    }
  }
  for (const RawBigLoad& l : raw.big_loads) {
    if (!ids.count(l.bus)) {
      throw Error(ErrorCode::UnknownBusReference, "load references bus " + std::to_string(l.bus));
    }
  }
  for (const RawBus& b : raw.buses) {
    if (b.type != 3) continue;
    bool has_gen = false;
    for (const RawGen& g : raw.gens) has_gen = has_gen || (g.bus == b.id && g.status > 0);
    if (!has_gen) {
      RawGen g;
      g.bus = b.id;
      g.vg = b.vm;
      g.implicit = true;
      raw.gens.push_back(g);
    }
  }
}

}  // namespace

RawCase parse_matpower(std::string_view source) {
  const std::string text = strip_comments(source);
  RawCase raw;
  if (auto fn = text.find("function"); fn != std::string::npos) {
    const std::size_t eq = text.find('=', fn);
    const std::size_t eol = text.find('\n', fn);
    if (eq != std::string::npos && eq < eol) {
      std::string name = text.substr(eq + 1, eol == std::string::npos ? std::string::npos : eol - eq - 1);
      name.erase(0, name.find_first_not_of(" \t"));
      name.erase(name.find_last_not_of(" \t\r;") + 1);
      raw.name = name;
    }
  }

  const auto base = read_scalar(text, "baseMVA");
  if (!base) throw Error(ErrorCode::MissingSection, "mpc.baseMVA not found");
  raw.base_mva = *base;

  const auto bus = read_table(text, "bus", 10);
  if (!bus) throw Error(ErrorCode::MissingSection, "mpc.bus not found");
  const auto branch = read_table(text, "branch", 11);
  if (!branch) throw Error(ErrorCode::MissingSection, "mpc.branch not found");
  const auto gen = read_table(text, "gen", 8);
  const auto big = read_table(text, "bigload", 5);

  for (const auto& r : *bus) {
    raw.buses.push_back({as_int(r[0]), as_int(r[1]), r[2], r[3], r[4], r[5], r[7], r[8], r[9]});
  }
  if (gen) {
    for (const auto& r : *gen) {
      RawGen g;
      g.bus = as_int(r[0]);
      g.pg = r[1];
      g.qg = r[2];
      g.qmax = r[3];
      g.qmin = r[4];
      g.vg = r[5];
      g.status = as_int(r[7]);
      raw.gens.push_back(g);
    }
  }
  for (const auto& r : *branch) {
    raw.branches.push_back({as_int(r[0]), as_int(r[1]), r[2], r[3], r[4], r[8], r[9], as_int(r[10])});
  }
  if (big) {
    for (const auto& r : *big) raw.big_loads.push_back({as_int(r[0]), r[1], r[2], r[3], r[4]});
  }
  check_raw(raw);
  return raw;
}

RawCase parse_json_case(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedTable, std::string("JSON: ") + e.what());
  }
  auto section = [&](const char* key) -> const json& {
    if (!doc.contains(key)) throw Error(ErrorCode::MissingSection, std::string("\"") + key + "\" not found");
    return doc.at(key);
  };
  RawCase raw;
  try {
    raw.name = doc.value("name", std::string());
    raw.base_mva = section("base_mva").get<double>();
    for (const json& b : section("buses")) {
      RawBus bus;
      bus.id = b.at("id").get<int>();
      const json& type = b.at("type");
      if (type.is_string()) {
        const std::string t = type.get<std::string>();
        bus.type = t == "slack" ? 3 : t == "pv" ? 2 : t == "pq" ? 1 : t == "isolated" ? 4 : 0;
        if (bus.type == 0) throw Error(ErrorCode::MalformedTable, "unknown bus type '" + t + "'");
      } else {
        bus.type = type.get<int>();
      }
      bus.pd = b.value("pd", 0.0);
      bus.qd = b.value("qd", 0.0);
      bus.gs = b.value("gs", 0.0);
      bus.bs = b.value("bs", 0.0);
      bus.vm = b.value("vm", 1.0);
      bus.va = b.value("va", 0.0);
      bus.base_kv = b.value("base_kv", 0.0);
      raw.buses.push_back(bus);
    }
    if (doc.contains("generators")) {
      for (const json& g : doc.at("generators")) {
        RawGen gen;
        gen.bus = g.at("bus").get<int>();
        gen.pg = g.value("pg", 0.0);
        gen.qg = g.value("qg", 0.0);
        gen.qmax = g.value("qmax", 0.0);
        gen.qmin = g.value("qmin", 0.0);
        gen.vg = g.value("vg", 1.0);
        gen.status = g.value("status", 1);
        if (g.contains("controlled_bus")) gen.controlled_bus = g.at("controlled_bus").get<int>();
        raw.gens.push_back(gen);
      }
    }
    for (const json& b : section("branches")) {
      RawBranch br;
      br.from = b.at("from").get<int>();
      br.to = b.at("to").get<int>();
      br.r = b.value("r", 0.0);
      br.x = b.value("x", 0.0);
      br.b = b.value("b", 0.0);
      br.tap = b.value("tap", 0.0);
      br.shift = b.value("shift", 0.0);
      br.status = b.value("status", 1);
      raw.branches.push_back(br);
    }
    if (doc.contains("big_loads")) {
      for (const json& l : doc.at("big_loads")) {
        raw.big_loads.push_back({l.at("bus").get<int>(), l.value("g", 0.0), l.value("b", 0.0),
                                 l.value("ir", 0.0), l.value("ii", 0.0)});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedTable, std::string("JSON: ") + e.what());
  }
  check_raw(raw);
  return raw;
}

RawCase load_case(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  RawCase raw = path.extension() == ".json" ? parse_json_case(buf.str()) : parse_matpower(buf.str());
  if (raw.name.empty()) raw.name = path.stem().string();
  return raw;
}

std::string format_matpower(const RawCase& raw) {
  std::string out;
  char line[512];
  auto put = [&](const char* fmt, auto... args) {
    std::snprintf(line, sizeof line, fmt, args...);
    out += line;
  };
  put("function mpc = %s\n", raw.name.empty() ? "txflow_case" : raw.name.c_str());
  out += "mpc.version = '2';\n";
  put("mpc.baseMVA = %.17g;\n", raw.base_mva);
  out += "% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin\nmpc.bus = [\n";
  for (const RawBus& b : raw.buses) {
    put("\t%d\t%d\t%.17g\t%.17g\t%.17g\t%.17g\t1\t%.17g\t%.17g\t%.17g\t1\t1.1\t0.9;\n", b.id, b.type,
        b.pd, b.qd, b.gs, b.bs, b.vm, b.va, b.base_kv);
  }
  out += "];\n% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin\nmpc.gen = [\n";
  for (const RawGen& g : raw.gens) {
    if (g.implicit) continue;
    put("\t%d\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%d\t0\t0;\n", g.bus, g.pg, g.qg, g.qmax,
        g.qmin, g.vg, raw.base_mva, g.status);
  }
  out += "];\n% fbus tbus r x b rateA rateB rateC ratio angle status angmin angmax\nmpc.branch = [\n";
  for (const RawBranch& br : raw.branches) {
    put("\t%d\t%d\t%.17g\t%.17g\t%.17g\t0\t0\t0\t%.17g\t%.17g\t%d\t-360\t360;\n", br.from, br.to, br.r,
        br.x, br.b, br.tap, br.shift, br.status);
  }
  out += "];\n";
  if (!raw.big_loads.empty()) {
    out += "% bus g b ir ii (per unit)\nmpc.bigload = [\n";
    for (const RawBigLoad& l : raw.big_loads) {
      put("\t%d\t%.17g\t%.17g\t%.17g\t%.17g;\n", l.bus, l.g, l.b, l.ir, l.ii);
    }
    out += "];\n";
  }
  return out;
}

Network to_network(const RawCase& raw, std::vector<std::string>* warnings) {
  if (!(raw.base_mva > 0.0)) throw Error(ErrorCode::NonPositiveBase, "baseMVA must be positive");
  auto warn = [&](std::string msg) {
    if (warnings) warnings->push_back(std::move(msg));
  };
  const double base = raw.base_mva;

  Network net;
  net.base_mva = base;
  net.name = raw.name;
  std::map<int, std::size_t> index_of;
  std::vector<const RawBus*> source;
  for (const RawBus& b : raw.buses) {
    if (b.type == 4) continue;
    index_of[b.id] = net.buses.size();
    net.buses.push_back({b.id, BusKind::PQ, 1.0, 0.0});
    source.push_back(&b);
  }

  // In-service generators grouped per bus, in table order.
  std::vector<std::vector<const RawGen*>> gens_at(net.buses.size());
  for (const RawGen& g : raw.gens) {
    if (g.status <= 0) continue;
    auto it = index_of.find(g.bus);
    if (it == index_of.end()) {
      warn("generator at isolated bus " + std::to_string(g.bus) + " ignored");
      continue;
    }
    gens_at[it->second].push_back(&g);
  }

  std::vector<double> pd(net.buses.size()), qd(net.buses.size());
  bool slack_found = false;
  for (std::size_t i = 0; i < net.buses.size(); ++i) {
    const RawBus& rb = *source[i];
    Bus& bus = net.buses[i];
    pd[i] = rb.pd / base;
    qd[i] = rb.qd / base;
    const auto& gs = gens_at[i];
    if (rb.type == 3) {
      bus.kind = BusKind::Slack;
      bus.v_set = gs.empty() ? rb.vm : gs.front()->vg;
      bus.angle_set = rb.va * kDeg;
      if (!slack_found) net.slack = i;
      slack_found = true;
    } else if (rb.type == 2 && !gs.empty()) {
      bus.kind = BusKind::PV;
      bus.v_set = gs.front()->vg;
    } else {
      if (rb.type == 2) warn("bus " + std::to_string(rb.id) + " has no generator in service; treated as PQ");
      // Generators on load buses inject fixed P and Q.
      for (const RawGen* g : gs) {
        pd[i] -= g->pg / base;
        qd[i] -= g->qg / base;
      }
    }
    if (bus.kind != BusKind::PV) continue;

    Generator gen;
    gen.bus = i;
    gen.v_set = gs.front()->vg;
    gen.controlled_bus = i;
    if (gs.front()->controlled_bus) {
      auto it = index_of.find(*gs.front()->controlled_bus);
      if (it == index_of.end()) {
        throw Error(ErrorCode::UnknownBusReference,
                    "controlled bus " + std::to_string(*gs.front()->controlled_bus) + " is not in service");
      }
      gen.controlled_bus = it->second;
    }
    for (const RawGen* g : gs) {
      gen.p += g->pg / base;
      gen.q_init += g->qg / base;
      if (g->vg != gen.v_set) {
        warn("bus " + std::to_string(rb.id) + ": conflicting generator setpoints, using " +
             std::to_string(gen.v_set));
      }
    }
    net.controls.push_back({i, gen.controlled_bus, gen.v_set, net.gens.size()});
    net.gens.push_back(gen);
  }

  for (std::size_t i = 0; i < net.buses.size(); ++i) {
    if (pd[i] != 0.0 || qd[i] != 0.0) net.loads.push_back({i, pd[i], qd[i], std::nullopt});
    const RawBus& rb = *source[i];
    if (rb.gs != 0.0 || rb.bs != 0.0) net.shunts.push_back({i, rb.gs / base, rb.bs / base});
  }
  for (const RawBigLoad& l : raw.big_loads) {
    auto it = index_of.find(l.bus);
    if (it == index_of.end()) continue;
    net.loads.push_back({it->second, 0.0, 0.0, BigLoad{l.g, l.b, Complex(l.ir, l.ii)}});
  }

  for (std::size_t k = 0; k < raw.branches.size(); ++k) {
    const RawBranch& rb = raw.branches[k];
    if (rb.status <= 0) continue;
    auto f = index_of.find(rb.from);
    auto t = index_of.find(rb.to);
    if (f == index_of.end() || t == index_of.end()) continue;
    Branch br;
    br.from = f->second;
    br.to = t->second;
    br.r = rb.r;
    br.x = rb.x;
    br.b_charging = rb.b;
    br.tap = rb.tap == 0.0 ? 1.0 : rb.tap;
    br.shift = rb.shift * kDeg;
    br.source_row = static_cast<int>(k);
    net.branches.push_back(br);
  }

  const std::vector<Diagnostic> diags = validate(net);
  if (!diags.empty()) {
    std::string msg;
    bool island = false;
    for (const Diagnostic& d : diags) {
      island = island || d.kind == DiagnosticKind::IslandWithoutSource;
      msg += std::string(to_string(d.kind)) + " (" + d.element + "): " + d.message + "; ";
    }
    throw Error(island ? ErrorCode::IslandWithoutSlack : ErrorCode::InvalidNetwork, msg);
  }
  return net;
}

std::vector<BusSolution> bus_solutions(const Network& network, const SolutionState& state) {
  const IndexMap index(network);
  std::vector<BusSolution> out;
  out.reserve(network.buses.size());
  for (std::size_t b = 0; b < network.buses.size(); ++b) {
    const double vr = state.x[index.vr(b)];
    const double vi = state.x[index.vi(b)];
    out.push_back({network.buses[b].id, std::hypot(vr, vi), std::atan2(vi, vr) / kDeg, vr, vi});
  }
  return out;
}

}  // namespace txflow
