#include <fstream>
#include <sstream>

#include "raftlab/error.hpp"
#include "raftlab/ingest.hpp"

namespace raftlab {

std::vector<TestOutcome> parse_native_lines(std::string_view bytes) {
  std::vector<TestOutcome> outcomes;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    auto eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) eol = bytes.size();
    std::string_view line = bytes.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    const auto tab1 = line.find('\t');
    const std::string_view status = line.substr(0, tab1);
    const auto where = [&] { return "native report line " + std::to_string(line_no); };
    if (status != "PASS" && status != "FAIL" && status != "SKIP")
      throw ParseError(where() + ": unknown status '" + std::string(status) + "'");
    if (tab1 == std::string_view::npos) throw ParseError(where() + ": missing test id");
    std::string_view rest = line.substr(tab1 + 1);
    const auto tab2 = rest.find('\t');
    const std::string id = normalize_test_id(rest.substr(0, tab2));
    if (id.empty()) throw ParseError(where() + ": empty test id");
    if (status == "SKIP") continue;

    TestOutcome t;
    t.test_id = id;
    t.status = status == "PASS" ? TestStatus::Pass : TestStatus::Fail;
    if (tab2 != std::string_view::npos) {
      std::string_view kind = rest.substr(tab2 + 1);
      if (!kind.empty() && t.status == TestStatus::Fail) t.failure_kind = std::string(kind);
    }
    outcomes.push_back(std::move(t));
  }
  return merge_duplicate_outcomes(std::move(outcomes));
}

ReportFormat sniff_report_format(std::string_view bytes) noexcept {
  if (bytes.substr(0, 3) == "\xEF\xBB\xBF") bytes.remove_prefix(3);
  const auto first = bytes.find_first_not_of(" \t\r\n");
  return first != std::string_view::npos && bytes[first] == '<' ? ReportFormat::JUnitXml
                                                                : ReportFormat::NativeLines;
}

std::vector<TestOutcome> parse_report(std::string_view bytes) {
  return sniff_report_format(bytes) == ReportFormat::JUnitXml ? parse_junit_xml(bytes)
                                                              : parse_native_lines(bytes);
}

std::vector<TestOutcome> parse_report_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read report '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_report(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace raftlab
