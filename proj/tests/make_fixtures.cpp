// Writes synthetic telemetry directories for the CLI tests.
//   make_fixtures <dir> valid|partial|empty

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "support/synthetic.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: %s <dir> valid|partial|empty\n", argv[0]);
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  const std::string mode = argv[2];
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  if (mode == "valid") {
    soe::testing::write_fixture_set(dir);
  } else if (mode == "partial") {
    soe::testing::SyntheticSpec ok;
    ok.id = "GOOD";
    soe::testing::write_battery(dir, ok);
    std::ofstream(dir / "BROKEN.csv") << "battery_id,cycle_index,phase,time_s,voltage_V,current_A\n"
                                      << "BROKEN,0,charge,0,not-a-number,1.5\n";
    soe::testing::SyntheticSpec broken;
    broken.id = "BROKEN";
    std::ofstream(dir / "BROKEN.json") << soe::serialize_metadata(soe::testing::make_metadata(broken));
  } else if (mode != "empty") {
    std::fprintf(stderr, "unknown mode %s\n", mode.c_str());
    return 2;
  }
  return 0;
}
