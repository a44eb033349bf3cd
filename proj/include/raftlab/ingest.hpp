#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "raftlab/records.hpp"

namespace raftlab {

/// Trims surrounding whitespace and collapses internal runs of whitespace to
/// a single space. Parameter strings are otherwise kept verbatim.
std::string normalize_test_id(std::string_view raw);

/// JUnit-style XML: one outcome per <testcase>. A <failure> or <error> child
/// makes it Fail with failure_kind "<tag>:<message>" (falling back to the
/// type attribute, then to the bare tag); <skipped> testcases are omitted.
/// Ids are "classname::name". Throws ParseError naming the byte offset.
std::vector<TestOutcome> parse_junit_xml(std::string_view bytes);

/// Native report: "STATUS\ttest_id[\tfailure_kind]" per line, STATUS one of
/// PASS, FAIL, SKIP. Throws ParseError naming the line number.
std::vector<TestOutcome> parse_native_lines(std::string_view bytes);

enum class ReportFormat { JUnitXml, NativeLines };

/// XML when the first non-whitespace byte is '<', native lines otherwise.
ReportFormat sniff_report_format(std::string_view bytes) noexcept;

std::vector<TestOutcome> parse_report(std::string_view bytes);
std::vector<TestOutcome> parse_report_file(const std::filesystem::path& path);

}  // namespace raftlab
