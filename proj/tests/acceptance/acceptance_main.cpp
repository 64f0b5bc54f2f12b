// Acceptance run: one PASS/FAIL line per criterion.
// usage: acceptance <path-to-etcbench-cli> <scratch-dir>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <string>

#include "etcbench/repro.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: acceptance <etcbench-cli> <scratch-dir>\n";
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path scratch = argv[2];
  fs::create_directories(scratch);

  etcbench::ReproOptions opts;
  opts.log = [](const std::string& s) { std::cerr << "  .. " << s << "\n"; };
  const etcbench::SuiteReport report = etcbench::run_suite("paper", opts);

  bool all = true;
  for (const auto& c : report.criteria) {
    const bool ok = c.passed && c.within_limit();
    all = all && ok;
    char timing[96];
    if (c.limit_seconds > 0) {
      std::snprintf(timing, sizeof timing, "%.2fs, limit %.0fs", c.seconds, c.limit_seconds);
    } else {
      std::snprintf(timing, sizeof timing, "%.2fs", c.seconds);
    }
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << c.summary << " ["
              << timing << "]";
    if (c.passed && !c.within_limit()) std::cout << " runtime limit exceeded";
    std::cout << std::endl;
  }

  // Two independent processes must write byte-identical reports.
  const fs::path a = scratch / "repro_run1.json";
  const fs::path b = scratch / "repro_run2.json";
  fs::remove(a);
  fs::remove(b);
  for (const fs::path& out : {a, b}) {
    const std::string cmd = quote(cli) + " repro --suite paper --quiet --out " + quote(out.string()) + " > /dev/null";
    if (std::system(cmd.c_str()) != 0) std::cerr << "  .. repro run exited non-zero\n";
  }
  const bool exist = fs::exists(a) && fs::exists(b);
  const bool same = exist && slurp(a) == slurp(b) && !slurp(a).empty();
  all = all && same;
  std::cout << (same ? "PASS" : "FAIL") << " criterion 11 (determinism): `repro --suite paper` twice, "
            << (exist ? (same ? "reports byte-identical" : "reports differ") : "report missing") << " ("
            << (exist ? std::to_string(fs::file_size(a)) : std::string("0")) << " bytes)" << std::endl;

  std::cout << (all ? "ALL CRITERIA PASSED" : "SOME CRITERIA FAILED") << std::endl;
  return all ? 0 : 1;
}
