#include "edgesec/policy.hpp"

#include <tuple>

namespace edgesec {

bool matches(const MatchPattern& p, const FlowMetadata& f) {
  if (p.src_addr && *p.src_addr != f.src_addr) return false;
  if (p.dst_addr && *p.dst_addr != f.dst_addr) return false;
  if (p.src_port && *p.src_port != f.src_port) return false;
  if (p.dst_port && *p.dst_port != f.dst_port) return false;
  if (p.protocol && *p.protocol != f.protocol) return false;
  if (p.device_id && *p.device_id != f.device_id) return false;
  return true;
}

bool ranks_below(const SecurityPolicy& a, const SecurityPolicy& b) {
  return std::make_tuple(static_cast<int>(a.priority), a.pattern.specificity(), a.issued_at,
                         a.policy_id) <
         std::make_tuple(static_cast<int>(b.priority), b.pattern.specificity(), b.issued_at,
                         b.policy_id);
}

}  // namespace edgesec
