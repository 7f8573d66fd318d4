#include "fsmscg/toolchain.hpp"

#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"

using namespace fsmscg;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// standard-JSON shaped compiler output with one error entry
json failing_output() {
  return json::parse(R"({
    "errors": [{
      "severity": "error",
      "message": "Undeclared identifier.",
      "errorCode": "7576",
      "sourceLocation": {"file": "contract.sol", "start": 52, "end": 60},
      "formattedMessage": "DeclarationError: Undeclared identifier.\n --> contract.sol:3:5\n"
    }],
    "contracts": {}
  })");
}

json clean_output() {
  return json::parse(R"({
    "errors": [{
      "severity": "warning",
      "message": "SPDX license identifier not provided.",
      "formattedMessage": "Warning: SPDX license identifier not provided."
    }],
    "contracts": {"contract.sol": {"A": {"evm": {"bytecode": {"object": "6080"}}}}}
  })");
}

json analyzer_output() {
  return json::parse(R"({
    "success": true,
    "error": null,
    "results": {"detectors": [{
      "check": "locked-ether",
      "impact": "Medium",
      "confidence": "High",
      "description": "Contract locking ether found",
      "elements": [{
        "type": "function",
        "name": "receive",
        "source_mapping": {"filename_relative": "contract.sol", "lines": [4, 5]}
      }]
    }]}
  })");
}

void write_fixture(const std::filesystem::path& dir, const char* kind,
                   std::string_view source, const json& output,
                   const std::string& version) {
  json wrapper;
  wrapper["version"] = version;
  wrapper["output"] = output;
  testsupport::write_file(
      dir / kind / (source_content_hash(source) + ".json"), wrapper.dump(2));
}

}  // namespace

TEST_CASE("select_compiler_version") {
  Toolchain toolchain({.default_solc_version = "0.8.24"});
  std::vector<SemVer> available = {{0, 8, 19}, {0, 8, 24}};

  SUBCASE("lowest satisfying version wins") {
    CHECK(toolchain.select_compiler_version("pragma solidity ^0.8.20;",
                                            available) == SemVer{0, 8, 24});
    CHECK(toolchain.select_compiler_version("pragma solidity >=0.8.0;",
                                            available) == SemVer{0, 8, 19});
  }
  SUBCASE("no pragma falls back to the configured default") {
    CHECK(toolchain.select_compiler_version("contract A {}", available) ==
          SemVer{0, 8, 24});
  }
  SUBCASE("unsatisfiable pragma") {
    CHECK_THROWS_AS(toolchain.select_compiler_version(
                        "pragma solidity ^0.9.0;", available),
                    NoSatisfyingVersion);
  }
  SUBCASE("empty available list is a caller bug") {
    CHECK_THROWS_AS(toolchain.select_compiler_version("contract A {}", {}),
                    ContractViolation);
  }
}

TEST_CASE("fixture playback compile") {
  testsupport::TempDir dir;
  std::string broken = "pragma solidity ^0.8.0;\ncontract Broken { x }\n";
  std::string clean = "pragma solidity ^0.8.0;\ncontract Ok {}\n";
  write_fixture(dir.path(), "compile", broken, failing_output(), "0.8.24");
  write_fixture(dir.path(), "compile", clean, clean_output(), "0.8.24");

  Toolchain toolchain({.fixture_dir = dir.path()});

  SUBCASE("error mapping") {
    CompileResult result = toolchain.compile_contract(broken, {0, 8, 24});
    CHECK_FALSE(result.success);
    REQUIRE(result.issues.size() == 1);
    CHECK(result.issues[0].severity == IssueSeverity::Error);
    CHECK(result.issues[0].message == "Undeclared identifier.");
    CHECK(result.issues[0].error_code == "7576");
    REQUIRE(result.issues[0].location.has_value());
    CHECK(result.issues[0].location->start == 52);
    CHECK(result.compiler_version == "0.8.24");
  }
  SUBCASE("success with warnings and artifacts") {
    CompileResult result = toolchain.compile_contract(clean, {0, 8, 24});
    CHECK(result.success);
    CHECK(result.issues.size() == 1);
    CHECK(result.issues[0].severity == IssueSeverity::Warning);
    CHECK(result.artifacts == true);
  }
  SUBCASE("playback is deterministic") {
    CHECK(toolchain.compile_contract(broken, {0, 8, 24}) ==
          toolchain.compile_contract(broken, {0, 8, 24}));
  }
  SUBCASE("missing fixture names the path") {
    CHECK_THROWS_AS(toolchain.compile_contract("contract Unknown {}",
                                               {0, 8, 24}),
                    ToolNotFound);
  }
}

TEST_CASE("fixture playback analysis") {
  testsupport::TempDir dir;
  std::string source = "pragma solidity ^0.8.0;\ncontract L { receive() external payable {} }\n";
  write_fixture(dir.path(), "analysis", source, analyzer_output(), "0.10.0");

  Toolchain toolchain({.fixture_dir = dir.path()});

  SUBCASE("detector mapping") {
    AnalysisResult result = toolchain.analyze_contract(source, {0, 8, 24});
    CHECK(result.ran);
    CHECK(result.analyzer_version == "0.10.0");
    REQUIRE(result.findings.size() == 1);
    const Finding& finding = result.findings[0];
    CHECK(finding.check_id == "locked-ether");
    CHECK(finding.severity == Severity::Medium);
    CHECK(finding.confidence == Confidence::High);
    REQUIRE(finding.location.has_value());
    CHECK(finding.location->function_name == "receive");
    CHECK(finding.location->lines == std::vector<int>{4, 5});
  }
  SUBCASE("empty detectors still count as a run") {
    std::string other = "contract Empty {}";
    write_fixture(dir.path(), "analysis", other,
                  json::parse(R"({"success": true, "results": {"detectors": []}})"),
                  "0.10.0");
    AnalysisResult result = toolchain.analyze_contract(other, {0, 8, 24});
    CHECK(result.ran);
    CHECK(result.findings.empty());
  }
  SUBCASE("unknown impact level refuses to map") {
    std::string bad = "contract Bad {}";
    json output = analyzer_output();
    output["results"]["detectors"][0]["impact"] = "Catastrophic";
    write_fixture(dir.path(), "analysis", bad, output, "0.10.0");
    CHECK_THROWS_AS(toolchain.analyze_contract(bad, {0, 8, 24}),
                    AnalyzerParseError);
  }
  SUBCASE("corrupt fixture json") {
    std::string corrupt = "contract Corrupt {}";
    testsupport::write_file(
        dir.path() / "analysis" / (source_content_hash(corrupt) + ".json"),
        "{not json");
    CHECK_THROWS_AS(toolchain.analyze_contract(corrupt, {0, 8, 24}),
                    AnalyzerParseError);
  }
}

TEST_CASE("result serialization round trips") {
  CompileResult compile;
  compile.success = false;
  compile.compiler_version = "0.8.24";
  compile.artifacts = false;
  CompileIssue issue;
  issue.severity = IssueSeverity::Error;
  issue.message = "boom";
  issue.error_code = "1234";
  issue.location = SourceSpan{"contract.sol", 10, 20};
  issue.formatted_message = "Error: boom";
  compile.issues.push_back(issue);
  CHECK(compile_result_from_json(compile_result_to_json(compile)) == compile);

  AnalysisResult analysis;
  analysis.ran = true;
  analysis.analyzer_version = "0.10.0";
  Finding finding;
  finding.check_id = "reentrancy-eth";
  finding.severity = Severity::High;
  finding.confidence = Confidence::Medium;
  finding.description = "reentrancy";
  finding.location = FindingLocation{"contract.sol", {7}, "withdraw"};
  analysis.findings.push_back(finding);
  CHECK(analysis_result_from_json(analysis_result_to_json(analysis)) ==
        analysis);
}

namespace {

// a stand-in tool binary backed by a shell script
fs::path write_tool(const fs::path& dir, const std::string& name,
                    const std::string& body) {
  fs::path path = dir / name;
  testsupport::write_file(path, "#!/bin/sh\n" + body);
  fs::permissions(path, fs::perms::owner_all);
  return path;
}

}  // namespace

TEST_CASE("live mode drives real subprocesses") {
  testsupport::TempDir dir;

  SUBCASE("standard-json conversation with the compiler") {
    // echoes a canned standard-json output after consuming stdin
    fs::path solc = write_tool(dir.path(), "fake-solc", R"(
if [ "$1" = "--version" ]; then
  echo "solc, the solidity compiler commandline interface"
  echo "Version: 0.8.24+commit.e11b9ed9.Linux.g++"
  exit 0
fi
cat > /dev/null
printf '%s' '{"errors":[{"severity":"warning","message":"note","formattedMessage":"Warning: note"}],"contracts":{"contract.sol":{"A":{"evm":{"bytecode":{"object":"6080"}}}}}}'
)");
    ToolchainConfig config;
    config.solc_path = solc.string();
    Toolchain toolchain(config);

    auto versions = toolchain.available_versions();
    REQUIRE(versions.size() == 1);
    CHECK(versions[0] == SemVer{0, 8, 24});

    CompileResult result =
        toolchain.compile_contract("contract A {}", versions[0]);
    CHECK(result.success);
    CHECK(result.issues.size() == 1);
    CHECK(result.artifacts == true);
  }
  SUBCASE("compiler timeout is enforced") {
    fs::path solc = write_tool(dir.path(), "slow-solc", "sleep 5\n");
    ToolchainConfig config;
    config.solc_path = solc.string();
    config.compile_timeout_s = 1;
    Toolchain toolchain(config);
    CHECK_THROWS_AS(toolchain.compile_contract("contract A {}", {0, 8, 24}),
                    ToolTimeout);
  }
  SUBCASE("garbage output without an exit status is a crash") {
    fs::path solc = write_tool(dir.path(), "broken-solc",
                               "cat > /dev/null\necho not-json\nexit 3\n");
    ToolchainConfig config;
    config.solc_path = solc.string();
    Toolchain toolchain(config);
    CHECK_THROWS_AS(toolchain.compile_contract("contract A {}", {0, 8, 24}),
                    ToolCrashed);
  }
  SUBCASE("analyzer json round trip") {
    fs::path slither = write_tool(dir.path(), "fake-slither", R"(
if [ "$1" = "--version" ]; then echo "0.10.0"; exit 0; fi
printf '%s' '{"success":true,"error":null,"results":{"detectors":[{"check":"locked-ether","impact":"Medium","confidence":"High","description":"locks ether"}]}}'
)");
    ToolchainConfig config;
    config.slither_path = slither.string();
    Toolchain toolchain(config);
    AnalysisResult result =
        toolchain.analyze_contract("contract L {}", {0, 8, 24});
    CHECK(result.ran);
    REQUIRE(result.findings.size() == 1);
    CHECK(result.findings[0].check_id == "locked-ether");
    CHECK(result.analyzer_version == "0.10.0");
  }
  SUBCASE("analyzer garbage is a parse error, never a clean pass") {
    fs::path slither =
        write_tool(dir.path(), "noisy-slither", "echo chaos\nexit 255\n");
    ToolchainConfig config;
    config.slither_path = slither.string();
    Toolchain toolchain(config);
    CHECK_THROWS_AS(toolchain.analyze_contract("contract L {}", {0, 8, 24}),
                    AnalyzerParseError);
  }
}

TEST_CASE("live mode reports a missing binary") {
  ToolchainConfig config;
  config.solc_path = "/nonexistent/solc-binary";
  config.slither_path = "/nonexistent/slither-binary";
  Toolchain toolchain(config);
  CHECK_THROWS_AS(toolchain.available_versions(), ToolNotFound);
  CHECK_THROWS_AS(toolchain.compile_contract("contract A {}", {0, 8, 24}),
                  ToolNotFound);
  CHECK_THROWS_AS(toolchain.analyze_contract("contract A {}", {0, 8, 24}),
                  ToolNotFound);
}

TEST_CASE("content hash is stable and sensitive") {
  CHECK(source_content_hash("abc") == source_content_hash("abc"));
  CHECK(source_content_hash("abc") != source_content_hash("abd"));
  CHECK(source_content_hash("").size() == 16);
}
