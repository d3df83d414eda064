// Real-thread smoke run of the queue on the native backend (no cooperative
// scheduler, no checking oracle beyond key accounting).

#include <cstdio>

#include "rflock/harness/scenarios.hpp"

int main() {
  auto r = rflock::harness::scenario_native_smoke({});
  std::printf("%s", r.detail.c_str());
  std::printf("native-smoke: %s\n", r.pass ? "ok" : "FAILED");
  return r.pass ? 0 : 1;
}
