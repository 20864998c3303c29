#include <benchmark/benchmark.h>

#include "edgesec/trust.hpp"
#include "edgesec/wire.hpp"

using namespace edgesec;

namespace {

void BM_EncodeRequest(benchmark::State& state) {
  AnalysisRequest req;
  req.box_id = 3;
  req.request_id = 1;
  req.metadata = {0x0A000101, 0x08000001, 50000, 443, 6, 2};
  for (auto _ : state) {
    auto bytes = wire::encode_request(req);
    benchmark::DoNotOptimize(bytes);
    req.request_id++;
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * 27);
}
BENCHMARK(BM_EncodeRequest);

void BM_DecodeRequest(benchmark::State& state) {
  AnalysisRequest req;
  req.metadata = {0x0A000101, 0x08000001, 50000, 443, 6, 2};
  auto bytes = wire::encode_request(req);
  for (auto _ : state) {
    auto decoded = wire::decode_request(bytes);
    benchmark::DoNotOptimize(decoded.ok());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * 27);
}
BENCHMARK(BM_DecodeRequest);

// Frame sealing is dominated by the ed25519 signature; this measures the
// per-message cost of the integrity layer.
void BM_SealRequestFrame(benchmark::State& state) {
  trust::CertAuthority ca(1);
  auto box = ca.register_subject(1, 0).value();
  AnalysisRequest req;
  req.box_id = 1;
  req.metadata = {0x0A000101, 0x08000001, 50000, 443, 6, 2};
  auto payload = wire::encode_request(req);
  for (auto _ : state) {
    auto frame = wire::seal_frame(wire::MessageType::AnalysisRequest, payload, box.cert,
                                  box.keys.secret_key);
    benchmark::DoNotOptimize(frame);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SealRequestFrame);

void BM_OpenAndVerifyFrame(benchmark::State& state) {
  trust::CertAuthority ca(2);
  auto box = ca.register_subject(1, 0).value();
  AnalysisRequest req;
  req.box_id = 1;
  req.metadata = {0x0A000101, 0x08000001, 50000, 443, 6, 2};
  auto payload = wire::encode_request(req);
  auto frame = wire::seal_frame(wire::MessageType::AnalysisRequest, payload, box.cert,
                                box.keys.secret_key);
  for (auto _ : state) {
    auto opened = wire::open_frame(frame);
    bool ok = opened.ok() && wire::frame_signature_ok(*opened);
    benchmark::DoNotOptimize(ok);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_OpenAndVerifyFrame);

}  // namespace
