#include "edgesec/sim/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace edgesec::sim {

using nlohmann::json;

std::uint32_t server_addr(std::uint32_t index) { return 0x08000001u + index; }        // 8.0.0.x
std::uint32_t zombie_addr(std::uint32_t index) { return 0xC6336401u + index; }        // 198.51.100.x
std::uint32_t benign_node_addr(std::uint32_t index) { return 0xCB007101u + index; }   // 203.0.113.x
std::uint32_t host_addr(std::size_t segment_index, std::size_t host_index) {
  return 0x0A000000u | (static_cast<std::uint32_t>(segment_index + 1) << 8) |
         static_cast<std::uint32_t>(host_index + 1);  // 10.0.s.h
}

namespace {

std::uint32_t parse_addr(const json& v, const std::string& where) {
  if (v.is_number_unsigned() || v.is_number_integer()) return v.get<std::uint32_t>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    std::uint32_t parts[4];
    char dot;
    std::istringstream in(s);
    if (in >> parts[0] >> dot >> parts[1] >> dot >> parts[2] >> dot >> parts[3]) {
      if (parts[0] < 256 && parts[1] < 256 && parts[2] < 256 && parts[3] < 256)
        return parts[0] << 24 | parts[1] << 16 | parts[2] << 8 | parts[3];
    }
    throw std::runtime_error(where + ": not a dotted address: " + s);
  }
  throw std::runtime_error(where + ": expected address (integer or dotted string)");
}

Verdict parse_verdict(const json& v, const std::string& where) {
  const std::string s = v.get<std::string>();
  if (s == "allow") return Verdict::Allow;
  if (s == "drop") return Verdict::Drop;
  throw std::runtime_error(where + ": verdict must be \"allow\" or \"drop\", got \"" + s + "\"");
}

Priority parse_priority(const json& v, const std::string& where) {
  const std::string s = v.get<std::string>();
  if (s == "normal") return Priority::Normal;
  if (s == "high") return Priority::High;
  if (s == "manual") return Priority::Manual;
  throw std::runtime_error(where + ": priority must be normal|high|manual, got \"" + s + "\"");
}

MatchPattern parse_pattern(const json& v, const std::string& where) {
  MatchPattern p;
  if (!v.is_object()) throw std::runtime_error(where + ": match must be an object");
  if (v.contains("src_addr")) p.src_addr = parse_addr(v["src_addr"], where + ".src_addr");
  if (v.contains("dst_addr")) p.dst_addr = parse_addr(v["dst_addr"], where + ".dst_addr");
  if (v.contains("src_port")) p.src_port = v["src_port"].get<std::uint16_t>();
  if (v.contains("dst_port")) p.dst_port = v["dst_port"].get<std::uint16_t>();
  if (v.contains("protocol")) p.protocol = v["protocol"].get<std::uint8_t>();
  if (v.contains("device_id")) p.device_id = v["device_id"].get<std::uint16_t>();
  return p;
}

json pattern_to_json(const MatchPattern& p) {
  json v = json::object();
  if (p.src_addr) v["src_addr"] = *p.src_addr;
  if (p.dst_addr) v["dst_addr"] = *p.dst_addr;
  if (p.src_port) v["src_port"] = *p.src_port;
  if (p.dst_port) v["dst_port"] = *p.dst_port;
  if (p.protocol) v["protocol"] = *p.protocol;
  if (p.device_id) v["device_id"] = *p.device_id;
  return v;
}

ScenarioConfig parse_json(const json& j) {
  ScenarioConfig c;
  c.seed = j.value("seed", std::uint64_t{1});
  c.ticks = j.value("ticks", Tick{240});
  c.link_delay = j.value("link_delay", Tick{1});
  c.collaboration = j.value("collaboration", true);
  c.sensor_report_every = j.value("sensor_report_every", Tick{0});
  c.backup_enabled = j.value("backup_enabled", true);

  if (j.contains("low_activity_windows"))
    for (const auto& w : j["low_activity_windows"])
      c.low_activity_windows.emplace_back(w.at(0).get<Tick>(), w.at(1).get<Tick>());

  if (j.contains("detector")) {
    c.detector.distinct_ports = j["detector"].value("distinct_ports", 10u);
    c.detector.window = j["detector"].value("window", Tick{50});
  }
  if (j.contains("blacklist")) {
    c.blacklist.repeat_limit = j["blacklist"].value("repeat_limit", 5u);
    c.blacklist.window = j["blacklist"].value("window", Tick{50});
    c.blacklist.malformed_limit = j["blacklist"].value("malformed_limit", 3u);
  }
  if (j.contains("servers")) {
    c.server_count = j["servers"].value("count", 32u);
    if (j["servers"].contains("ports")) {
      c.server_ports.clear();
      for (const auto& p : j["servers"]["ports"]) c.server_ports.push_back(p.get<std::uint16_t>());
    }
  }

  if (j.contains("middleboxes")) {
    for (std::size_t i = 0; i < j["middleboxes"].size(); ++i) {
      const auto& m = j["middleboxes"][i];
      const std::string where = "middleboxes[" + std::to_string(i) + "]";
      MiddleboxSpec spec;
      spec.name = m.at("name").get<std::string>();
      const std::string kind = m.at("kind").get<std::string>();
      if (kind == "firewall") {
        spec.kind = MiddleboxKind::Firewall;
      } else if (kind == "ids") {
        spec.kind = MiddleboxKind::Ids;
      } else if (kind == "dpi") {
        spec.kind = MiddleboxKind::Dpi;
      } else {
        throw std::runtime_error(where + ".kind: unknown kind \"" + kind + "\"");
      }
      spec.allowlist_all_servers = m.value("allowlist_all_servers", false);
      if (m.contains("allowlist"))
        for (const auto& a : m["allowlist"])
          spec.allowlist_extra.push_back(parse_addr(a, where + ".allowlist"));
      if (m.contains("rules"))
        for (const auto& r : m["rules"]) {
          FirewallRuleSpec rule;
          rule.klass = r.at("class").get<std::string>();
          rule.action = parse_verdict(r.at("action"), where + ".rules.action");
          if (r.contains("match")) rule.pattern = parse_pattern(r["match"], where + ".rules.match");
          spec.rules.push_back(std::move(rule));
        }
      if (m.contains("signatures"))
        for (const auto& s : m["signatures"]) {
          IdsSignatureSpec sig;
          sig.pattern = parse_pattern(s.at("match"), where + ".signatures.match");
          if (s.contains("rate"))
            sig.rate = RateCondition{s["rate"].at("max_flows").get<std::uint32_t>(),
                                     s["rate"].at("window").get<Tick>()};
          spec.signatures.push_back(std::move(sig));
        }
      if (m.contains("banned_labels"))
        for (const auto& l : m["banned_labels"]) spec.banned_labels.push_back(l.get<std::string>());
      spec.replicas = m.value("replicas", 0);
      c.middleboxes.push_back(std::move(spec));
    }
  }

  if (j.contains("segments")) {
    for (std::size_t i = 0; i < j["segments"].size(); ++i) {
      const auto& s = j["segments"][i];
      const std::string where = "segments[" + std::to_string(i) + "]";
      SegmentSpec seg;
      seg.box_id = s.at("box_id").get<std::uint32_t>();
      for (const auto& h : s.at("hosts")) {
        HostSpec host;
        host.device_id = h.at("device_id").get<std::uint16_t>();
        host.klass = h.at("class").get<std::string>();
        seg.hosts.push_back(std::move(host));
      }
      if (s.contains("gateway")) {
        const auto& g = s["gateway"];
        if (g.contains("default_inbound"))
          seg.gateway.default_inbound = parse_verdict(g["default_inbound"], where);
        if (g.contains("default_outbound"))
          seg.gateway.default_outbound = parse_verdict(g["default_outbound"], where);
        seg.gateway.pending_timeout = g.value("pending_timeout", Tick{2});
      }
      const auto& p = s.at("profile");
      seg.profile.share_data = p.value("share_data", true);
      seg.profile.full_session_routing = p.value("full_session_routing", false);
      for (const auto& [klass, chain] : p.at("chains").items()) {
        std::vector<std::string> names;
        for (const auto& n : chain) names.push_back(n.get<std::string>());
        seg.profile.chains.emplace_back(klass, std::move(names));
      }
      if (s.contains("manual_policies"))
        for (const auto& mp : s["manual_policies"]) {
          ManualPolicySpec spec;
          spec.pattern = parse_pattern(mp.at("match"), where + ".manual_policies.match");
          spec.verdict = parse_verdict(mp.at("verdict"), where + ".manual_policies.verdict");
          seg.manual_policies.push_back(std::move(spec));
        }
      c.segments.push_back(std::move(seg));
    }
  }

  if (j.contains("baseline_policies"))
    for (const auto& bp : j["baseline_policies"]) {
      BaselinePolicySpec spec;
      spec.pattern = parse_pattern(bp.at("match"), "baseline_policies.match");
      spec.verdict = parse_verdict(bp.at("verdict"), "baseline_policies.verdict");
      if (bp.contains("priority"))
        spec.priority = parse_priority(bp["priority"], "baseline_policies.priority");
      c.baseline_policies.push_back(std::move(spec));
    }

  if (j.contains("benign")) {
    c.benign.outbound_per_host_per_tick = j["benign"].value("outbound_per_host_per_tick", 1u);
    c.benign.nodes = j["benign"].value("nodes", 0u);
    c.benign.inbound_per_node_per_tick = j["benign"].value("inbound_per_node_per_tick", 1u);
  }
  if (j.contains("attack")) {
    const auto& a = j["attack"];
    c.attack.zombies = a.value("zombies", 0u);
    c.attack.ports_per_zombie = a.value("ports_per_zombie", 1000u);
    c.attack.probes_per_tick = a.value("probes_per_tick", 5u);
    if (a.contains("schedule"))
      for (const auto& e : a["schedule"]) {
        AttackScheduleEntry entry;
        entry.segment = e.at("segment").get<std::size_t>();
        entry.start = e.at("start").get<Tick>();
        if (e.contains("end")) entry.end = e["end"].get<Tick>();
        c.attack.schedule.push_back(entry);
      }
  }

  if (j.contains("failures"))
    for (const auto& f : j["failures"])
      c.failures.push_back(FailureSpec{f.at("tick").get<Tick>(),
                                       f.at("component").get<std::string>()});
  if (j.contains("revocations"))
    for (const auto& r : j["revocations"])
      c.revocations.push_back(RevocationSpec{r.at("tick").get<Tick>(),
                                             r.at("subject_id").get<std::uint32_t>()});

  if (j.contains("flows"))
    for (std::size_t i = 0; i < j["flows"].size(); ++i) {
      const auto& f = j["flows"][i];
      const std::string where = "flows[" + std::to_string(i) + "]";
      FlowSpec spec;
      spec.tick = f.at("tick").get<Tick>();
      spec.segment = f.at("segment").get<std::size_t>();
      spec.flow.src_addr = parse_addr(f.at("src_addr"), where + ".src_addr");
      spec.flow.dst_addr = parse_addr(f.at("dst_addr"), where + ".dst_addr");
      spec.flow.src_port = f.value("src_port", std::uint16_t{0});
      spec.flow.dst_port = f.value("dst_port", std::uint16_t{0});
      spec.flow.protocol = f.value("protocol", std::uint8_t{6});
      spec.flow.device_id = f.at("device_id").get<std::uint16_t>();
      spec.direction = f.value("direction", std::string("outbound")) == "inbound"
                           ? FlowDirection::Inbound
                           : FlowDirection::Outbound;
      spec.label = f.value("label", std::string());
      spec.attack = f.value("attack", false);
      c.flows.push_back(std::move(spec));
    }

  return c;
}

}  // namespace

std::vector<std::string> validate(const ScenarioConfig& c) {
  std::vector<std::string> errors;
  auto err = [&errors](const std::string& msg) { errors.push_back(msg); };

  if (c.ticks == 0) err("ticks: must be positive");
  if (c.link_delay == 0) err("link_delay: must be at least 1 tick");
  if (c.segments.empty()) err("segments: at least one segment is required");
  if (c.detector.distinct_ports == 0) err("detector.distinct_ports: must be positive");
  if (c.detector.window == 0) err("detector.window: must be positive");

  for (const auto& [start, end] : c.low_activity_windows)
    if (start >= end)
      err("low_activity_windows: window [" + std::to_string(start) + ", " + std::to_string(end) +
          ") is empty");

  std::set<std::string> mb_names;
  for (const auto& m : c.middleboxes) {
    if (m.name.empty()) err("middleboxes: name must be non-empty");
    if (!mb_names.insert(m.name).second) err("middleboxes: duplicate name \"" + m.name + "\"");
    if (m.replicas < 0) err("middleboxes[" + m.name + "].replicas: must be non-negative");
    if (m.kind != MiddleboxKind::Firewall && (!m.rules.empty() || m.allowlist_all_servers))
      err("middleboxes[" + m.name + "]: firewall settings on a non-firewall");
    if (m.kind != MiddleboxKind::Ids && !m.signatures.empty())
      err("middleboxes[" + m.name + "]: signatures on a non-ids middlebox");
    if (m.kind != MiddleboxKind::Dpi && !m.banned_labels.empty())
      err("middleboxes[" + m.name + "]: banned_labels on a non-dpi middlebox");
  }

  std::set<std::uint32_t> box_ids;
  for (std::size_t i = 0; i < c.segments.size(); ++i) {
    const auto& seg = c.segments[i];
    const std::string where = "segments[" + std::to_string(i) + "]";
    if (seg.box_id == 0) err(where + ".box_id: must be non-zero");
    if (!box_ids.insert(seg.box_id).second)
      err(where + ".box_id: duplicate box id " + std::to_string(seg.box_id));
    if (seg.hosts.empty()) err(where + ".hosts: at least one host is required");
    std::set<std::uint16_t> devices;
    std::set<TrafficClass> classes;
    for (const auto& [klass, chain] : seg.profile.chains) {
      classes.insert(klass);
      if (chain.empty()) err(where + ".profile.chains[" + klass + "]: chain is empty");
      for (const auto& name : chain)
        if (mb_names.count(name) == 0)
          err(where + ".profile.chains[" + klass + "]: unknown middlebox \"" + name + "\"");
    }
    if (seg.profile.chains.empty()) err(where + ".profile.chains: at least one class is required");
    for (const auto& host : seg.hosts) {
      if (!devices.insert(host.device_id).second)
        err(where + ".hosts: duplicate device_id " + std::to_string(host.device_id));
      if (classes.count(host.klass) == 0)
        err(where + ".hosts: device " + std::to_string(host.device_id) +
            " has class \"" + host.klass + "\" with no chain");
    }
  }

  for (const auto& entry : c.attack.schedule) {
    if (entry.segment >= c.segments.size())
      err("attack.schedule: segment index " + std::to_string(entry.segment) + " out of range");
    if (entry.end && *entry.end <= entry.start) err("attack.schedule: end must be after start");
  }
  if (c.attack.zombies > 0 && c.attack.schedule.empty())
    err("attack: zombies configured but schedule is empty");
  if (c.attack.zombies > 0 && c.attack.ports_per_zombie == 0)
    err("attack.ports_per_zombie: must be positive");

  if ((c.benign.outbound_per_host_per_tick > 0 || c.benign.nodes > 0) && c.server_ports.empty())
    err("servers.ports: must be non-empty when benign traffic is configured");
  if (c.benign.outbound_per_host_per_tick > 0 && c.server_count == 0)
    err("servers.count: must be positive when hosts generate outbound traffic");

  for (const auto& f : c.failures) {
    if (f.component == "cloud-primary") {
      if (!c.backup_enabled) err("failures: cloud-primary failure requires backup_enabled");
    } else if (f.component.rfind("middlebox:", 0) == 0) {
      const std::string name = f.component.substr(10);
      if (mb_names.count(name) == 0) err("failures: unknown middlebox \"" + name + "\"");
    } else {
      err("failures: unknown component \"" + f.component + "\"");
    }
  }

  for (std::size_t i = 0; i < c.flows.size(); ++i) {
    const auto& f = c.flows[i];
    const std::string where = "flows[" + std::to_string(i) + "]";
    if (f.segment >= c.segments.size()) {
      err(where + ".segment: index out of range");
      continue;
    }
    bool device_known = false;
    for (const auto& host : c.segments[f.segment].hosts)
      if (host.device_id == f.flow.device_id) device_known = true;
    if (!device_known)
      err(where + ".device_id: " + std::to_string(f.flow.device_id) +
          " is not a host of segment " + std::to_string(f.segment));
    if (f.tick >= c.ticks) err(where + ".tick: beyond scenario end");
  }

  return errors;
}

Result<ScenarioConfig, std::string> parse_scenario(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded()) {
    // Re-parse with exceptions to recover the position information.
    try {
      json parsed = json::parse(json_text);
      (void)parsed;
    } catch (const json::parse_error& e) {
      return std::string(e.what());
    }
    return std::string("invalid JSON");
  }
  try {
    ScenarioConfig config = parse_json(j);
    auto errors = validate(config);
    if (!errors.empty()) {
      std::string joined;
      for (const auto& e : errors) {
        if (!joined.empty()) joined += "\n";
        joined += e;
      }
      return joined;
    }
    return config;
  } catch (const std::exception& e) {
    return std::string(e.what());
  }
}

Result<ScenarioConfig, std::string> load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::string("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string scenario_to_json(const ScenarioConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["ticks"] = c.ticks;
  j["link_delay"] = c.link_delay;
  j["collaboration"] = c.collaboration;
  j["backup_enabled"] = c.backup_enabled;
  if (c.sensor_report_every > 0) j["sensor_report_every"] = c.sensor_report_every;
  if (!c.low_activity_windows.empty()) {
    j["low_activity_windows"] = json::array();
    for (const auto& [start, end] : c.low_activity_windows)
      j["low_activity_windows"].push_back({start, end});
  }
  j["detector"] = {{"distinct_ports", c.detector.distinct_ports}, {"window", c.detector.window}};
  j["blacklist"] = {{"repeat_limit", c.blacklist.repeat_limit},
                    {"window", c.blacklist.window},
                    {"malformed_limit", c.blacklist.malformed_limit}};
  j["servers"] = {{"count", c.server_count}, {"ports", c.server_ports}};

  j["middleboxes"] = json::array();
  for (const auto& m : c.middleboxes) {
    json v;
    v["name"] = m.name;
    v["kind"] = m.kind == MiddleboxKind::Firewall ? "firewall"
                : m.kind == MiddleboxKind::Ids    ? "ids"
                                                  : "dpi";
    if (m.allowlist_all_servers) v["allowlist_all_servers"] = true;
    if (!m.allowlist_extra.empty()) v["allowlist"] = m.allowlist_extra;
    if (!m.rules.empty()) {
      v["rules"] = json::array();
      for (const auto& r : m.rules)
        v["rules"].push_back({{"class", r.klass},
                              {"action", r.action == Verdict::Allow ? "allow" : "drop"},
                              {"match", pattern_to_json(r.pattern)}});
    }
    if (!m.signatures.empty()) {
      v["signatures"] = json::array();
      for (const auto& s : m.signatures) {
        json sig{{"match", pattern_to_json(s.pattern)}};
        if (s.rate) sig["rate"] = {{"max_flows", s.rate->max_flows}, {"window", s.rate->window}};
        v["signatures"].push_back(sig);
      }
    }
    if (!m.banned_labels.empty()) v["banned_labels"] = m.banned_labels;
    if (m.replicas > 0) v["replicas"] = m.replicas;
    j["middleboxes"].push_back(v);
  }

  j["segments"] = json::array();
  for (const auto& seg : c.segments) {
    json v;
    v["box_id"] = seg.box_id;
    v["hosts"] = json::array();
    for (const auto& h : seg.hosts)
      v["hosts"].push_back({{"device_id", h.device_id}, {"class", h.klass}});
    v["gateway"] = {
        {"default_inbound", seg.gateway.default_inbound == Verdict::Allow ? "allow" : "drop"},
        {"default_outbound", seg.gateway.default_outbound == Verdict::Allow ? "allow" : "drop"},
        {"pending_timeout", seg.gateway.pending_timeout}};
    json chains = json::object();
    for (const auto& [klass, names] : seg.profile.chains) chains[klass] = names;
    v["profile"] = {{"share_data", seg.profile.share_data},
                    {"full_session_routing", seg.profile.full_session_routing},
                    {"chains", chains}};
    if (!seg.manual_policies.empty()) {
      v["manual_policies"] = json::array();
      for (const auto& mp : seg.manual_policies)
        v["manual_policies"].push_back(
            {{"verdict", mp.verdict == Verdict::Allow ? "allow" : "drop"},
             {"match", pattern_to_json(mp.pattern)}});
    }
    j["segments"].push_back(v);
  }

  if (!c.baseline_policies.empty()) {
    j["baseline_policies"] = json::array();
    for (const auto& bp : c.baseline_policies) {
      json v{{"verdict", bp.verdict == Verdict::Allow ? "allow" : "drop"},
             {"match", pattern_to_json(bp.pattern)}};
      v["priority"] = bp.priority == Priority::Normal ? "normal"
                      : bp.priority == Priority::High ? "high"
                                                      : "manual";
      j["baseline_policies"].push_back(v);
    }
  }

  j["benign"] = {{"outbound_per_host_per_tick", c.benign.outbound_per_host_per_tick},
                 {"nodes", c.benign.nodes},
                 {"inbound_per_node_per_tick", c.benign.inbound_per_node_per_tick}};
  j["attack"] = {{"zombies", c.attack.zombies},
                 {"ports_per_zombie", c.attack.ports_per_zombie},
                 {"probes_per_tick", c.attack.probes_per_tick}};
  j["attack"]["schedule"] = json::array();
  for (const auto& e : c.attack.schedule) {
    json v{{"segment", e.segment}, {"start", e.start}};
    if (e.end) v["end"] = *e.end;
    j["attack"]["schedule"].push_back(v);
  }

  if (!c.failures.empty()) {
    j["failures"] = json::array();
    for (const auto& f : c.failures)
      j["failures"].push_back({{"tick", f.tick}, {"component", f.component}});
  }
  if (!c.revocations.empty()) {
    j["revocations"] = json::array();
    for (const auto& r : c.revocations)
      j["revocations"].push_back({{"tick", r.tick}, {"subject_id", r.subject_id}});
  }
  if (!c.flows.empty()) {
    j["flows"] = json::array();
    for (const auto& f : c.flows) {
      json v;
      v["tick"] = f.tick;
      v["segment"] = f.segment;
      v["src_addr"] = f.flow.src_addr;
      v["dst_addr"] = f.flow.dst_addr;
      v["src_port"] = f.flow.src_port;
      v["dst_port"] = f.flow.dst_port;
      v["protocol"] = f.flow.protocol;
      v["device_id"] = f.flow.device_id;
      v["direction"] = f.direction == FlowDirection::Inbound ? "inbound" : "outbound";
      if (!f.label.empty()) v["label"] = f.label;
      if (f.attack) v["attack"] = true;
      j["flows"].push_back(v);
    }
  }

  return j.dump(2);
}

}  // namespace edgesec::sim
