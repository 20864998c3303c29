#include "edgesec/sim/simulation.hpp"

#include <map>
#include <memory>
#include <sstream>

#include "json.hpp"

namespace edgesec::sim {

namespace {

constexpr std::uint32_t kCssSubjectId = 0xFFFFFF01u;

// splitmix64 streams: cheap, stable across platforms, one per traffic source
// so toggling collaboration or failures never shifts the generated traffic.
struct SplitMix {
  std::uint64_t state;

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  std::uint32_t below(std::uint32_t bound) {
    return bound == 0 ? 0 : static_cast<std::uint32_t>(next() % bound);
  }
};

struct Delivery {
  bool to_cloud = false;
  std::uint32_t box_id = 0;  // sender when to_cloud, destination otherwise
  std::vector<std::uint8_t> frame;
  std::string label;  // content label for request frames
};

struct Engine {
  explicit Engine(const ScenarioConfig& config)
      : config_(config),
        ca_(config.seed ^ 0xC0FFEEull),
        benign_rng_{config.seed ^ 0x1111111111111111ull},
        attack_rng_{config.seed ^ 0x2222222222222222ull} {}

  const ScenarioConfig& config_;
  trust::CertAuthority ca_;
  SplitMix benign_rng_;
  SplitMix attack_rng_;

  std::unique_ptr<CloudService> primary_;
  std::unique_ptr<CloudService> backup_;
  CloudService* active_ = nullptr;
  bool primary_failed_ = false;

  std::vector<std::unique_ptr<Gateway>> gateways_;
  std::map<std::uint32_t, std::size_t> segment_of_box_;
  std::map<std::string, InstanceId> instance_by_name_;

  std::vector<std::vector<std::uint16_t>> zombie_ports_;
  std::vector<std::size_t> zombie_cursor_;

  std::map<Tick, std::vector<Delivery>> schedule_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> pending_flow_;  // (box, req) -> idx
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::string> pending_label_;

  SimResult result_;

  MiddleboxManager build_manager() {
    MiddleboxManager manager;
    for (const auto& spec : config_.middleboxes) {
      MiddleboxConfig mb_config;
      switch (spec.kind) {
        case MiddleboxKind::Firewall: {
          FirewallConfig fw;
          if (spec.allowlist_all_servers)
            for (std::uint32_t i = 0; i < config_.server_count; ++i)
              fw.allowlist.insert(server_addr(i));
          for (std::uint32_t addr : spec.allowlist_extra) fw.allowlist.insert(addr);
          for (const auto& rule : spec.rules)
            fw.rules.push_back(FirewallRule{rule.klass, rule.pattern, rule.action});
          mb_config = std::move(fw);
          break;
        }
        case MiddleboxKind::Ids: {
          IdsConfig ids;
          for (const auto& sig : spec.signatures)
            ids.signatures.push_back(IdsSignature{sig.pattern, sig.rate});
          mb_config = std::move(ids);
          break;
        }
        case MiddleboxKind::Dpi: {
          DpiConfig dpi;
          for (const auto& label : spec.banned_labels) dpi.banned_labels.insert(label);
          mb_config = std::move(dpi);
          break;
        }
      }
      InstanceId id = manager.add_instance(spec.kind, mb_config);
      instance_by_name_[spec.name] = id;  // same ids on every build
      for (int r = 0; r < spec.replicas; ++r) manager.add_instance(spec.kind, mb_config, id);
    }
    return manager;
  }

  Result<std::monostate, std::string> setup() {
    auto css_enrollment = ca_.register_subject(kCssSubjectId, 0);
    if (!css_enrollment.ok()) return std::string("css enrollment failed");

    CloudConfig cloud_config;
    cloud_config.css_id = kCssSubjectId;
    cloud_config.detector = config_.detector;
    cloud_config.blacklist = config_.blacklist;
    cloud_config.collaboration = config_.collaboration;
    cloud_config.low_activity_windows = config_.low_activity_windows;

    MiddleboxManager manager_primary = build_manager();
    primary_ = std::make_unique<CloudService>(cloud_config, css_enrollment->keys,
                                              css_enrollment->cert, &ca_,
                                              std::move(manager_primary), CloudRole::Primary);
    if (config_.backup_enabled) {
      MiddleboxManager manager_backup = build_manager();
      backup_ = std::make_unique<CloudService>(cloud_config, css_enrollment->keys,
                                               css_enrollment->cert, &ca_,
                                               std::move(manager_backup), CloudRole::Backup);
      primary_->connect_backup(backup_.get());
    }
    active_ = primary_.get();

    for (const auto& spec : config_.baseline_policies)
      primary_->preload_policy(spec.pattern, spec.verdict, spec.priority, 0);

    for (std::size_t seg = 0; seg < config_.segments.size(); ++seg) {
      const SegmentSpec& spec = config_.segments[seg];
      auto enrollment = ca_.register_subject(spec.box_id, 0);
      if (!enrollment.ok())
        return std::string("box enrollment failed for box ") + std::to_string(spec.box_id);

      UserProfile profile;
      profile.box_id = spec.box_id;
      profile.share_data = spec.profile.share_data;
      profile.full_session_routing = spec.profile.full_session_routing;
      for (const auto& [klass, names] : spec.profile.chains) {
        ServiceChain chain;
        for (const auto& name : names) chain.push_back(instance_by_name_.at(name));
        profile.chains[klass] = std::move(chain);
      }
      for (const auto& host : spec.hosts) profile.class_map[host.device_id] = host.klass;
      primary_->register_box(spec.box_id, enrollment->cert, profile, 0);

      GatewayConfig gw_config;
      gw_config.box_id = spec.box_id;
      gw_config.css_id = kCssSubjectId;
      gw_config.default_inbound = spec.gateway.default_inbound;
      gw_config.default_outbound = spec.gateway.default_outbound;
      gw_config.pending_timeout = spec.gateway.pending_timeout;
      auto gateway = std::make_unique<Gateway>(gw_config, enrollment->keys, enrollment->cert,
                                               ca_.root_public_key());
      for (const auto& manual : spec.manual_policies)
        gateway->add_manual_policy(manual.pattern, manual.verdict, 0);
      segment_of_box_[spec.box_id] = seg;
      gateways_.push_back(std::move(gateway));
    }

    zombie_ports_.resize(config_.attack.zombies);
    zombie_cursor_.assign(config_.attack.zombies, 0);
    for (std::uint32_t z = 0; z < config_.attack.zombies; ++z) {
      zombie_ports_[z].reserve(config_.attack.ports_per_zombie);
      for (std::uint32_t i = 0; i < config_.attack.ports_per_zombie; ++i)
        zombie_ports_[z].push_back(static_cast<std::uint16_t>(1 + attack_rng_.below(65535)));
    }

    result_.metrics.segment_count = config_.segments.size();
    result_.metrics.ticks = config_.ticks;
    result_.metrics.cells.assign(config_.segments.size() * config_.ticks, MetricsCell{});
    result_.metrics.css_requests_cum.assign(config_.ticks, 0);

    // Registration-time emissions (bootstrap updates) leave at tick 0.
    drain_cloud_outbox(0);
    return std::monostate{};
  }

  void schedule(Tick due, Delivery delivery) { schedule_[due].push_back(std::move(delivery)); }

  void drain_cloud_outbox(Tick now) {
    for (auto& emission : active_->take_outbox()) {
      if (emission.frame.size() > 4 &&
          emission.frame[4] == static_cast<std::uint8_t>(wire::MessageType::PolicyUpdate)) {
        auto seg_it = segment_of_box_.find(emission.box_id);
        if (seg_it != segment_of_box_.end())
          result_.metrics.at(now, seg_it->second).update_bytes += emission.frame.size();
      }
      schedule(now + config_.link_delay,
               Delivery{false, emission.box_id, std::move(emission.frame), {}});
    }
  }

  void drain_gateway_outboxes(Tick now) {
    for (std::size_t seg = 0; seg < gateways_.size(); ++seg) {
      Gateway& gw = *gateways_[seg];
      for (auto& frame : gw.take_outbox()) {
        std::string label;
        if (frame.size() > 4 &&
            frame[4] == static_cast<std::uint8_t>(wire::MessageType::AnalysisRequest)) {
          auto opened = wire::open_frame(frame);
          if (opened.ok()) {
            auto req = wire::decode_request(opened->payload);
            if (req.ok()) {
              auto it = pending_label_.find({req->box_id, req->request_id});
              if (it != pending_label_.end()) label = it->second;
            }
          }
        }
        schedule(now + config_.link_delay, Delivery{true, gw.box_id(), std::move(frame), label});
      }
    }
  }

  void resolve_flow(std::uint32_t box_id, const ResolvedFlow& resolved, Tick now) {
    auto it = pending_flow_.find({box_id, resolved.request_id});
    if (it == pending_flow_.end()) return;
    FlowOutcome& outcome = result_.flows[it->second];
    outcome.final_verdict = resolved.verdict;
    outcome.resolved_at = now;
    outcome.via_timeout = resolved.via_timeout;
    pending_flow_.erase(it);
    pending_label_.erase({box_id, resolved.request_id});
  }

  void inject(std::size_t seg, const FlowMetadata& flow, FlowDirection direction, bool attack,
              const std::string& label, Tick now) {
    Gateway& gw = *gateways_[seg];
    MetricsCell& cell = result_.metrics.at(now, seg);
    (attack ? cell.attack_received : cell.benign_received) += 1;

    FlowOutcome outcome;
    outcome.injected_at = now;
    outcome.segment = seg;
    outcome.flow = flow;
    outcome.direction = direction;
    outcome.attack = attack;
    outcome.label = label;

    FlowDecision decision = gw.process_flow(flow, direction, now);
    if (auto* verdict = std::get_if<Verdict>(&decision)) {
      outcome.final_verdict = *verdict;
      outcome.resolved_at = now;
      if (*verdict == Verdict::Drop) {
        outcome.category = FlowCategory::DroppedLocal;
        (attack ? cell.attack_dropped_local : cell.benign_dropped_local) += 1;
      } else {
        outcome.category = FlowCategory::Allowed;
        (attack ? cell.attack_allowed : cell.benign_allowed) += 1;
      }
      result_.flows.push_back(std::move(outcome));
    } else {
      const auto& pending = std::get<CloudPending>(decision);
      outcome.category = FlowCategory::Analyzed;
      (attack ? cell.attack_analyzed : cell.benign_analyzed) += 1;
      result_.flows.push_back(std::move(outcome));
      pending_flow_[{gw.box_id(), pending.request.request_id}] = result_.flows.size() - 1;
      if (!label.empty()) pending_label_[{gw.box_id(), pending.request.request_id}] = label;
    }
  }

  void inject_generated(Tick now) {
    // Explicit flows first, in declaration order.
    for (const auto& spec : config_.flows)
      if (spec.tick == now) inject(spec.segment, spec.flow, spec.direction, spec.attack,
                                   spec.label, now);

    // Hosts browsing out to the server catalog.
    for (std::size_t seg = 0; seg < config_.segments.size(); ++seg) {
      for (std::size_t h = 0; h < config_.segments[seg].hosts.size(); ++h) {
        const HostSpec& host = config_.segments[seg].hosts[h];
        for (std::uint32_t k = 0; k < config_.benign.outbound_per_host_per_tick; ++k) {
          FlowMetadata flow;
          flow.src_addr = host_addr(seg, h);
          flow.dst_addr = server_addr(benign_rng_.below(config_.server_count));
          flow.src_port = static_cast<std::uint16_t>(49152 + benign_rng_.below(16384));
          flow.dst_port = config_.server_ports[benign_rng_.below(
              static_cast<std::uint32_t>(config_.server_ports.size()))];
          flow.protocol = 6;
          flow.device_id = host.device_id;
          inject(seg, flow, FlowDirection::Outbound, false, {}, now);
        }
      }
    }

    // External peers opening inbound connections to hosts.
    for (std::uint32_t n = 0; n < config_.benign.nodes; ++n) {
      for (std::uint32_t k = 0; k < config_.benign.inbound_per_node_per_tick; ++k) {
        std::size_t seg = benign_rng_.below(static_cast<std::uint32_t>(config_.segments.size()));
        const auto& hosts = config_.segments[seg].hosts;
        std::size_t h = benign_rng_.below(static_cast<std::uint32_t>(hosts.size()));
        FlowMetadata flow;
        flow.src_addr = benign_node_addr(n);
        flow.dst_addr = host_addr(seg, h);
        flow.src_port = static_cast<std::uint16_t>(49152 + benign_rng_.below(16384));
        flow.dst_port = config_.server_ports[benign_rng_.below(
            static_cast<std::uint32_t>(config_.server_ports.size()))];
        flow.protocol = 6;
        flow.device_id = hosts[h].device_id;
        inject(seg, flow, FlowDirection::Inbound, false, {}, now);
      }
    }

    // The zombie swarm scans every currently targeted segment.
    for (const auto& entry : config_.attack.schedule) {
      Tick end = entry.end.value_or(config_.ticks);
      if (now < entry.start || now >= end) continue;
      const auto& hosts = config_.segments[entry.segment].hosts;
      for (std::uint32_t z = 0; z < config_.attack.zombies; ++z) {
        for (std::uint32_t p = 0; p < config_.attack.probes_per_tick; ++p) {
          std::size_t h = attack_rng_.below(static_cast<std::uint32_t>(hosts.size()));
          FlowMetadata flow;
          flow.src_addr = zombie_addr(z);
          flow.dst_addr = host_addr(entry.segment, h);
          flow.src_port = static_cast<std::uint16_t>(49152 + attack_rng_.below(16384));
          flow.dst_port = zombie_ports_[z][zombie_cursor_[z]++ % zombie_ports_[z].size()];
          flow.protocol = 6;
          flow.device_id = hosts[h].device_id;
          inject(entry.segment, flow, FlowDirection::Inbound, true, {}, now);
        }
      }
    }
  }

  void process_failures(Tick now) {
    for (const auto& failure : config_.failures) {
      if (failure.tick != now) continue;
      if (failure.component == "cloud-primary") {
        if (!primary_failed_ && backup_ != nullptr) {
          primary_failed_ = true;
          auto promoted = backup_->promote();
          (void)promoted;
          active_ = backup_.get();
        }
      } else if (failure.component.rfind("middlebox:", 0) == 0) {
        auto it = instance_by_name_.find(failure.component.substr(10));
        if (it != instance_by_name_.end()) active_->fail_middlebox(it->second, now);
      }
    }
    for (const auto& revocation : config_.revocations) {
      if (revocation.tick != now) continue;
      auto status = ca_.revoke(revocation.subject_id);
      (void)status;
      active_->on_revoked(revocation.subject_id, now);
    }
  }

  void process_deliveries(Tick now) {
    auto it = schedule_.find(now);
    if (it == schedule_.end()) return;
    std::vector<Delivery> due = std::move(it->second);
    schedule_.erase(it);
    for (Delivery& d : due) {
      if (d.to_cloud) {
        active_->handle_frame(d.box_id, d.frame, now, d.label);
        continue;
      }
      auto seg_it = segment_of_box_.find(d.box_id);
      if (seg_it == segment_of_box_.end()) continue;
      Gateway& gw = *gateways_[seg_it->second];
      if (d.frame.size() <= 4) continue;
      auto type = static_cast<wire::MessageType>(d.frame[4]);
      if (type == wire::MessageType::AnalysisResponse) {
        auto resolved = gw.on_response(d.frame, now, kCssSubjectId);
        if (resolved.ok()) resolve_flow(d.box_id, *resolved, now);
      } else if (type == wire::MessageType::PolicyUpdate) {
        auto applied = gw.receive_update(d.frame, now, kCssSubjectId);
        (void)applied;
      }
    }
  }

  void run_loop() {
    for (Tick now = 0; now < config_.ticks; ++now) {
      process_failures(now);
      process_deliveries(now);
      for (std::size_t seg = 0; seg < gateways_.size(); ++seg)
        for (const auto& resolved : gateways_[seg]->expire_pending(now))
          resolve_flow(gateways_[seg]->box_id(), resolved, now);
      inject_generated(now);
      if (config_.sensor_report_every > 0 && now > 0 && now % config_.sensor_report_every == 0) {
        Tick start = now >= config_.sensor_report_every ? now - config_.sensor_report_every + 1 : 0;
        for (auto& gw : gateways_) gw->emit_sensor_report(start, now);
      }
      drain_gateway_outboxes(now);
      active_->end_tick(now);
      drain_cloud_outbox(now);
      result_.metrics.css_requests_cum[now] = active_->request_count();
    }
  }

  void finalize() {
    result_.update_emissions = active_->emission_log();
    result_.detections = active_->detections();
    result_.blacklist_events = active_->blacklist_events();

    std::ostringstream out;
    using nlohmann::json;
    for (const auto& d : result_.detections) {
      json line{{"kind", "detection"}, {"tick", d.tick}, {"source", d.source_addr}};
      if (d.scope_box)
        line["scope_box"] = *d.scope_box;
      else
        line["scope_box"] = nullptr;
      out << line.dump() << '\n';
    }
    for (const auto& b : result_.blacklist_events) {
      out << json{{"kind", "blacklist"}, {"tick", b.tick}, {"box", b.box_id},
                  {"reason", b.reason}}
                 .dump()
          << '\n';
    }
    for (std::size_t seg = 0; seg < config_.segments.size(); ++seg) {
      MetricsCell totals = result_.metrics.segment_totals(seg);
      out << json{{"kind", "segment_summary"},
                  {"segment", seg},
                  {"box", config_.segments[seg].box_id},
                  {"attack_received", totals.attack_received},
                  {"attack_analyzed", totals.attack_analyzed},
                  {"attack_dropped_local", totals.attack_dropped_local},
                  {"attack_allowed", totals.attack_allowed},
                  {"benign_received", totals.benign_received},
                  {"benign_analyzed", totals.benign_analyzed},
                  {"benign_dropped_local", totals.benign_dropped_local},
                  {"benign_allowed", totals.benign_allowed},
                  {"update_bytes", totals.update_bytes}}
                 .dump()
          << '\n';
    }
    out << json{{"kind", "run_summary"},
                {"css_requests", active_->request_count()},
                {"detections", result_.detections.size()},
                {"blacklisted", result_.blacklist_events.size()},
                {"store_policies", active_->store_size()}}
               .dump()
        << '\n';
    result_.analytics_jsonl = out.str();
  }

  Result<SimResult, std::string> run() {
    auto ready = setup();
    if (!ready.ok()) return ready.error();
    run_loop();
    finalize();
    return std::move(result_);
  }
};

}  // namespace

Result<SimResult, std::string> run_scenario(const ScenarioConfig& config) {
  auto errors = validate(config);
  if (!errors.empty()) {
    std::string joined;
    for (const auto& e : errors) {
      if (!joined.empty()) joined += "\n";
      joined += e;
    }
    return joined;
  }
  Engine engine(config);
  return engine.run();
}

bool replay_check(const ScenarioConfig& config) {
  auto first = run_scenario(config);
  auto second = run_scenario(config);
  if (!first.ok() || !second.ok()) return false;
  return metrics_to_csv(first->metrics) == metrics_to_csv(second->metrics) &&
         first->analytics_jsonl == second->analytics_jsonl;
}

}  // namespace edgesec::sim
