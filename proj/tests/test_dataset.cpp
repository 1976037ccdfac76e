#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "vulnboost/dataset.hpp"
#include "vulnboost/synth.hpp"

using namespace vulnboost;

namespace {

namespace fs = std::filesystem;

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// Independent day-count oracle: walk the calendar month by month. Kept free
// of <chrono> so it cannot share a bug with the implementation.
bool oracle_is_leap(int y) {
  return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

int oracle_month_days(int y, int m) {
  static const int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && oracle_is_leap(y)) return 29;
  return days[m - 1];
}

long oracle_days_since_1899_12_31(int y, int m, int d) {
  long total = 1;  // 1900/1/1 is one day after the epoch
  for (int yy = 1900; yy < y; ++yy) total += oracle_is_leap(yy) ? 366 : 365;
  for (int mm = 1; mm < m; ++mm) total += oracle_month_days(y, mm);
  return total + (d - 1);
}

long oracle_serial(int y, int m, int d) {
  bool after_gap = (y > 1900) || (y == 1900 && m >= 3);
  return oracle_days_since_1899_12_31(y, m, d) + (after_gap ? 1 : 0);
}

std::string csv_header(const FeatureSchema& schema, bool labeled = true) {
  std::string h;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (i) h += ',';
    h += schema.column(i).name;
  }
  if (labeled) h += ",Score";
  return h + "\n";
}

// A well-formed raw row for the default schema.
std::string sample_row(const std::string& score = "0") {
  return "NO,YES,NO,NO,Ubuntu18.04,PHP5.3.29,Apache2.4.33,2,WordPress5.9.3,"
         "5.5,CVE-2021-44228,2022/4/7," +
         score + "\n";
}

}  // namespace

// ---------------------------------------------------------------------------
// concept_merge
// ---------------------------------------------------------------------------

TEST(ConceptMerge, VersionTruncationExamples) {
  EXPECT_EQ(concept_merge("Ubuntu18.04", ConceptRule::kMajorOnly), "Ubuntu18");
  EXPECT_EQ(concept_merge("PHP5.3.29", ConceptRule::kMajorMinor), "PHP5.3");
  EXPECT_EQ(concept_merge("Apache2.4.33", ConceptRule::kMajorMinor),
            "Apache2.4");
  EXPECT_EQ(concept_merge("WordPress5.9.3", ConceptRule::kMajorMinor),
            "WordPress5.9");
  EXPECT_EQ(concept_merge("CVE-2021-44228", ConceptRule::kYearOnly),
            "CVE-2021");
}

TEST(ConceptMerge, NoneRuleIsIdentity) {
  EXPECT_EQ(concept_merge("anything at all", ConceptRule::kNone),
            "anything at all");
}

TEST(ConceptMerge, UnparseableValuePassesThroughWithWarning) {
  std::size_t warnings = 0;
  EXPECT_EQ(concept_merge("Ubuntu", ConceptRule::kMajorOnly, &warnings),
            "Ubuntu");
  EXPECT_EQ(concept_merge("CVE-123-5", ConceptRule::kYearOnly, &warnings),
            "CVE-123-5");
  EXPECT_EQ(warnings, 2u);
}

TEST(ConceptMerge, ShortVersionsKeepWhatExists) {
  EXPECT_EQ(concept_merge("PHP5", ConceptRule::kMajorMinor), "PHP5");
  EXPECT_EQ(concept_merge("Windows2016", ConceptRule::kMajorOnly),
            "Windows2016");
}

TEST(ConceptMerge, FiveDigitRunIsNotAYear) {
  std::size_t warnings = 0;
  EXPECT_EQ(concept_merge("CVE-20211-44", ConceptRule::kYearOnly, &warnings),
            "CVE-20211-44");
  EXPECT_EQ(warnings, 1u);
}

TEST(ConceptMerge, IdempotentOnRandomishInputs) {
  RngStream rng(17);
  const std::vector<std::string> names = {"Apache", "nginx", "X",  "CVE-",
                                          "",       "Win",   "a.b"};
  for (int i = 0; i < 500; ++i) {
    std::string v = names[rng.next_index(names.size())];
    int parts = static_cast<int>(rng.next_index(4));
    for (int p = 0; p < parts; ++p) {
      if (p) v += '.';
      v += std::to_string(rng.next_index(3000));
    }
    if (rng.next_unit() < 0.3) v += "-suffix";
    for (ConceptRule rule : {ConceptRule::kNone, ConceptRule::kMajorOnly,
                             ConceptRule::kMajorMinor, ConceptRule::kYearOnly}) {
      std::string once = concept_merge(v, rule);
      EXPECT_EQ(concept_merge(once, rule), once)
          << "value '" << v << "' rule " << to_string(rule);
    }
  }
}

// ---------------------------------------------------------------------------
// date_to_serial
// ---------------------------------------------------------------------------

TEST(DateSerial, ReferenceDate) { EXPECT_EQ(date_to_serial("2022/4/7"), 44658); }

TEST(DateSerial, SerialSystemBase) { EXPECT_EQ(date_to_serial("1900/1/1"), 1); }

TEST(DateSerial, DayCountOracleValue) {
  // 97 Gregorian days before 2022/4/7, so 44658 - 97.
  EXPECT_EQ(date_to_serial("2021/12/31"), 44561);
}

TEST(DateSerial, FictitiousLeapDayGap) {
  EXPECT_EQ(date_to_serial("1900/2/28"), 59);
  EXPECT_EQ(date_to_serial("1900/3/1"), 61);  // slot 60 is the fictitious day
}

TEST(DateSerial, AcceptsZeroPaddedComponents) {
  EXPECT_EQ(date_to_serial("2022/04/07"), 44658);
}

TEST(DateSerial, Errors) {
  EXPECT_THROW(date_to_serial("1899/12/31"), DataError);
  EXPECT_THROW(date_to_serial("2021/2/29"), DataError);
  EXPECT_THROW(date_to_serial("1900/2/29"), DataError);
  EXPECT_THROW(date_to_serial("not a date"), DataError);
  EXPECT_THROW(date_to_serial("2021-01-02"), DataError);
  EXPECT_THROW(date_to_serial("2021/13/1"), DataError);
}

TEST(DateSerial, MatchesOracleAndIsMonotone) {
  RngStream rng(23);
  long prev_serial = 0;
  // Walk random ascending dates from 1900/3/1; serial differences must equal
  // Gregorian day differences.
  int y = 1900, m = 3, d = 1;
  long prev_days = oracle_days_since_1899_12_31(y, m, d);
  prev_serial = date_to_serial("1900/3/1");
  EXPECT_EQ(prev_serial, oracle_serial(y, m, d));
  for (int step = 0; step < 300; ++step) {
    int advance = 1 + static_cast<int>(rng.next_index(400));
    for (int i = 0; i < advance; ++i) {
      if (++d > oracle_month_days(y, m)) {
        d = 1;
        if (++m > 12) {
          m = 1;
          ++y;
        }
      }
    }
    std::string text = std::to_string(y) + "/" + std::to_string(m) + "/" +
                       std::to_string(d);
    long serial = date_to_serial(text);
    long days = oracle_days_since_1899_12_31(y, m, d);
    EXPECT_EQ(serial, oracle_serial(y, m, d)) << text;
    EXPECT_EQ(serial - prev_serial, days - prev_days) << text;
    EXPECT_GT(serial, prev_serial);
    prev_serial = serial;
    prev_days = days;
  }
}

TEST(DateSerial, RoundTripsThroughText) {
  for (long serial : {1L, 59L, 61L, 44658L, 42005L}) {
    EXPECT_EQ(date_to_serial(serial_to_date(serial)), serial);
  }
}

// ---------------------------------------------------------------------------
// LabelEncoder
// ---------------------------------------------------------------------------

TEST(LabelEncoder, SortedCodeAssignment) {
  LabelEncoder enc;
  enc.fit_column("os", {"Ubuntu20", "CentOS7", "Ubuntu18"});
  EXPECT_EQ(enc.encode("os", "CentOS7"), 0);
  EXPECT_EQ(enc.encode("os", "Ubuntu18"), 1);
  EXPECT_EQ(enc.encode("os", "Ubuntu20"), 2);
}

TEST(LabelEncoder, UnseenCategoryBehaviour) {
  LabelEncoder enc;
  enc.fit_column("os", {"a", "b"});
  EXPECT_THROW(enc.encode("os", "zzz"), DataError);
  std::size_t warnings = 0;
  EXPECT_EQ(enc.encode("os", "zzz", true, &warnings), 2);  // reserved code
  EXPECT_EQ(warnings, 1u);
}

TEST(LabelEncoder, EncodeDecodeIdentityProperty) {
  RngStream rng(5);
  for (int round = 0; round < 50; ++round) {
    std::set<std::string> cats;
    std::size_t n = 1 + rng.next_index(40);
    while (cats.size() < n)
      cats.insert("cat-" + std::to_string(rng.next_index(100000)));
    LabelEncoder enc;
    enc.fit_column("col", cats);
    std::set<int> codes;
    for (const auto& c : cats) {
      int code = enc.encode("col", c);
      EXPECT_EQ(enc.decode("col", code), c);
      codes.insert(code);
    }
    EXPECT_EQ(codes.size(), cats.size());  // bijection
    EXPECT_EQ(*codes.begin(), 0);
    EXPECT_EQ(*codes.rbegin(), static_cast<int>(cats.size()) - 1);
  }
}

TEST(LabelEncoder, SerializeParseRoundTrip) {
  LabelEncoder enc;
  enc.fit_column("os", {"Ubuntu18", "CentOS7"});
  enc.fit_column("app", {"WordPress5.9"});
  std::istringstream in(enc.serialize());
  LabelEncoder back = LabelEncoder::parse(in, "mem");
  EXPECT_EQ(back.encode("os", "Ubuntu18"), enc.encode("os", "Ubuntu18"));
  EXPECT_EQ(back.cardinality("app"), 1u);
}

// ---------------------------------------------------------------------------
// Schema files
// ---------------------------------------------------------------------------

TEST(Schema, DefaultSchemaIsValid) {
  FeatureSchema schema = FeatureSchema::asset_default();
  EXPECT_EQ(schema.size(), kNumFeatures);
}

TEST(Schema, SaveLoadRoundTrip) {
  FeatureSchema schema = FeatureSchema::asset_default();
  std::string path = temp_path("vb_schema_test.txt");
  schema.save(path);
  FeatureSchema back = FeatureSchema::load(path);
  EXPECT_EQ(back.serialize(), schema.serialize());
  EXPECT_EQ(back.fingerprint(), schema.fingerprint());
  fs::remove(path);
}

TEST(Schema, RejectsBadShapes) {
  std::vector<Column> cols = FeatureSchema::asset_default().columns();
  cols.pop_back();
  EXPECT_THROW(FeatureSchema{cols}, ConfigError);

  cols = FeatureSchema::asset_default().columns();
  cols[1].name = cols[0].name;  // duplicate
  EXPECT_THROW(FeatureSchema{cols}, ConfigError);

  cols = FeatureSchema::asset_default().columns();
  cols[4].rule = ConceptRule::kNone;  // version column without a rule
  EXPECT_THROW(FeatureSchema{cols}, ConfigError);
}

// ---------------------------------------------------------------------------
// load_raw_csv
// ---------------------------------------------------------------------------

TEST(LoadCsv, HeaderOnlyGivesEmptyList) {
  FeatureSchema schema = FeatureSchema::asset_default();
  std::string path = temp_path("vb_empty.csv");
  write_file(path, csv_header(schema));
  EXPECT_TRUE(load_raw_csv(path, schema).empty());
  fs::remove(path);
}

TEST(LoadCsv, SingleRow) {
  FeatureSchema schema = FeatureSchema::asset_default();
  std::string path = temp_path("vb_one.csv");
  write_file(path, csv_header(schema) + sample_row("3"));
  auto records = load_raw_csv(path, schema);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].values.size(), 13u);
  EXPECT_EQ(records[0].values.back(), "3");
  fs::remove(path);
}

TEST(LoadCsv, ArityErrorNamesRow2) {
  FeatureSchema schema = FeatureSchema::asset_default();
  std::string path = temp_path("vb_arity.csv");
  write_file(path, csv_header(schema) + "a,b,c,d,e,f,g,h,i,j,k\n");
  try {
    load_raw_csv(path, schema);
    FAIL() << "expected arity error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos)
        << e.what();
  }
  fs::remove(path);
}

TEST(LoadCsv, HeaderMismatchListsOffendingColumns) {
  FeatureSchema schema = FeatureSchema::asset_default();
  std::string path = temp_path("vb_badheader.csv");
  std::string header = csv_header(schema);
  auto pos = header.find("firewall");
  header.replace(pos, 8, "fireball");
  write_file(path, header);
  try {
    load_raw_csv(path, schema);
    FAIL() << "expected header mismatch";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("fireball"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("firewall"), std::string::npos);
  }
  fs::remove(path);
}

TEST(LoadCsv, MissingFile) {
  EXPECT_THROW(load_raw_csv("/nonexistent/nope.csv",
                            FeatureSchema::asset_default()),
               DataError);
}

TEST(LoadCsv, UnlabeledHeaderAccepted) {
  FeatureSchema schema = FeatureSchema::asset_default();
  std::string path = temp_path("vb_unlabeled.csv");
  std::string row = sample_row();
  row = row.substr(0, row.rfind(','));  // drop the score field
  write_file(path, csv_header(schema, false) + row + "\n");
  auto records = load_raw_csv(path, schema);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].values.size(), 12u);
  fs::remove(path);
}

// ---------------------------------------------------------------------------
// encode_dataset
// ---------------------------------------------------------------------------

TEST(EncodeDataset, FlagsAndLabelZero) {
  FeatureSchema schema = FeatureSchema::asset_default();
  RawAssetRecord rec{split(trim("NO,NO,NO,NO,Ubuntu18.04,PHP5.3.29,"
                               "Apache2.4.33,0,WordPress5.9.3,0.0,"
                               "CVE-2021-44228,2022/4/7,0"),
                          ',')};
  auto ds = encode_dataset({rec}, schema);
  ASSERT_EQ(ds.size(), 1u);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(ds.features.at(0, c), 0.0);
  EXPECT_EQ(ds.labels[0], 0);
  EXPECT_EQ(ds.features.at(0, 11), 44658.0);  // date serial
}

TEST(EncodeDataset, YesTokenVariantsAccepted) {
  FeatureSchema schema = FeatureSchema::asset_default();
  for (const std::string yes : {"YES", "yes", "1", "TRUE", "true"}) {
    RawAssetRecord rec{split(yes + ",NO,NO,NO,Ubuntu18.04,PHP5,Apache2.4,0,"
                                 "WordPress5.9,0,CVE-2021-1,2020/1/1,0",
                             ',')};
    auto ds = encode_dataset({rec}, schema);
    EXPECT_EQ(ds.features.at(0, 0), 1.0) << yes;
  }
  RawAssetRecord bad{split("maybe,NO,NO,NO,Ubuntu18.04,PHP5,Apache2.4,0,"
                           "WordPress5.9,0,CVE-2021-1,2020/1/1,0",
                           ',')};
  EXPECT_THROW(encode_dataset({bad}, schema), DataError);
}

TEST(EncodeDataset, SortOrderGivesCodes) {
  FeatureSchema schema = FeatureSchema::asset_default();
  RawAssetRecord a{split("NO,NO,NO,NO,Ubuntu18.04,PHP5,Apache2.4,0,"
                         "WordPress5.9,0,CVE-2021-1,2020/1/1,0",
                         ',')};
  RawAssetRecord b = a;
  b.values[4] = "Ubuntu20.10";
  b.values.back() = "1";
  auto ds = encode_dataset({a, b}, schema);
  // Concepted to Ubuntu18 / Ubuntu20; sorted order gives codes 0 and 1.
  EXPECT_EQ(ds.features.at(0, 4), 0.0);
  EXPECT_EQ(ds.features.at(1, 4), 1.0);
}

TEST(EncodeDataset, ScoreOutOfRange) {
  FeatureSchema schema = FeatureSchema::asset_default();
  RawAssetRecord rec{split(sample_row("11").substr(0, sample_row("11").size() - 1), ',')};
  try {
    encode_dataset({rec}, schema);
    FAIL() << "expected range error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
  }
}

TEST(EncodeDataset, UnparseableNumericCell) {
  FeatureSchema schema = FeatureSchema::asset_default();
  RawAssetRecord rec{split(sample_row().substr(0, sample_row().size() - 1), ',')};
  rec.values[9] = "high";  // cvss column
  EXPECT_THROW(encode_dataset({rec}, schema), DataError);
}

// ---------------------------------------------------------------------------
// stratified_split
// ---------------------------------------------------------------------------

namespace {

EncodedDataset labels_only_dataset(const std::vector<int>& labels) {
  EncodedDataset ds;
  ds.schema = FeatureSchema::asset_default();
  ds.features = Matrix(labels.size(), kNumFeatures);
  for (std::size_t r = 0; r < labels.size(); ++r)
    ds.features.at(r, 0) = static_cast<double>(r);  // keep rows distinct
  ds.labels = labels;
  return ds;
}

}  // namespace

TEST(StratifiedSplit, SingleClassArithmetic) {
  auto ds = labels_only_dataset(std::vector<int>(100, 4));
  auto [train, test] = stratified_split(ds, 0.2, 1);
  EXPECT_EQ(train.size(), 80u);
  EXPECT_EQ(test.size(), 20u);
}

TEST(StratifiedSplit, FullScaleTotals) {
  // 24000 rows over 11 classes, every count divisible by 5.
  std::vector<std::size_t> counts = {4800, 3360, 2880, 2400, 2160, 1920,
                                     1680, 1440, 1200, 1080, 1080};
  std::vector<int> labels;
  for (int c = 0; c < 11; ++c)
    labels.insert(labels.end(), counts[static_cast<std::size_t>(c)], c);
  ASSERT_EQ(labels.size(), 24000u);
  auto ds = labels_only_dataset(labels);
  auto [train, test] = stratified_split(ds, 0.2, 42);
  EXPECT_EQ(train.size(), 19200u);
  EXPECT_EQ(test.size(), 4800u);
}

TEST(StratifiedSplit, DeterministicForSeed) {
  RngStream rng(9);
  std::vector<int> labels;
  for (int i = 0; i < 500; ++i)
    labels.push_back(static_cast<int>(rng.next_index(11)));
  for (int c = 0; c < 11; ++c) {
    labels.push_back(c);
    labels.push_back(c);
  }
  auto ds = labels_only_dataset(labels);
  auto [train1, test1] = stratified_split(ds, 0.25, 77);
  auto [train2, test2] = stratified_split(ds, 0.25, 77);
  EXPECT_EQ(train1.features.data, train2.features.data);
  EXPECT_EQ(test1.labels, test2.labels);
  auto [train3, test3] = stratified_split(ds, 0.25, 78);
  EXPECT_NE(test1.features.data, test3.features.data);
}

TEST(StratifiedSplit, PerClassProportionWithinOneRow) {
  RngStream rng(11);
  for (int round = 0; round < 10; ++round) {
    std::vector<int> labels;
    for (int c = 0; c < 11; ++c) {
      std::size_t n = 2 + rng.next_index(60);
      labels.insert(labels.end(), n, c);
    }
    double fraction = 0.1 + 0.8 * rng.next_unit();
    auto ds = labels_only_dataset(labels);
    auto [train, test] = stratified_split(ds, fraction, round);
    EXPECT_EQ(train.size() + test.size(), ds.size());
    std::map<int, long> class_total, class_test;
    for (int l : ds.labels) class_total[l]++;
    for (int l : test.labels) class_test[l]++;
    for (auto& [cls, total] : class_total) {
      double expected = static_cast<double>(total) * fraction;
      EXPECT_LE(std::abs(class_test[cls] - expected), 1.0)
          << "class " << cls << " round " << round;
    }
  }
}

TEST(StratifiedSplit, RejectsTinyClasses) {
  auto ds = labels_only_dataset({0, 0, 1});
  EXPECT_THROW(stratified_split(ds, 0.5, 0), DataError);
}

TEST(StratifiedFolds, EveryClassInEveryFold) {
  std::vector<int> labels;
  for (int c = 0; c < 11; ++c) labels.insert(labels.end(), 30, c);
  auto folds = stratified_folds(labels, 3, 5);
  std::map<std::pair<int, int>, int> counts;
  for (std::size_t i = 0; i < labels.size(); ++i)
    counts[{folds[i], labels[i]}]++;
  for (int f = 0; f < 3; ++f)
    for (int c = 0; c < 11; ++c) EXPECT_EQ((counts[{f, c}]), 10);
}

// ---------------------------------------------------------------------------
// synth_dataset
// ---------------------------------------------------------------------------

TEST(Synth, UniformWeightsHitQuota) {
  std::array<double, 11> uniform{};
  uniform.fill(1.0);
  auto records = synth_dataset(1100, uniform, 7);
  ASSERT_EQ(records.size(), 1100u);
  std::array<int, 11> counts{};
  for (const auto& rec : records)
    counts[static_cast<std::size_t>(std::stoi(rec.values.back()))]++;
  for (int c = 0; c < 11; ++c) {
    EXPECT_GE(counts[static_cast<std::size_t>(c)], 90) << c;
    EXPECT_LE(counts[static_cast<std::size_t>(c)], 110) << c;
  }
}

TEST(Synth, ConcentratedWeights) {
  std::array<double, 11> w{};
  w[0] = 0.95;
  for (int c = 1; c < 11; ++c) w[static_cast<std::size_t>(c)] = 0.005;
  auto records = synth_dataset(2000, w, 3);
  std::size_t zeros = 0;
  for (const auto& rec : records) zeros += rec.values.back() == "0";
  EXPECT_GE(zeros, 1800u);  // >= 90%
}

TEST(Synth, SameSeedSameBytes) {
  FeatureSchema schema = FeatureSchema::asset_default();
  std::ostringstream a, b;
  write_raw_csv(a, synth_dataset(300, kDefaultSkewWeights, 99), schema, true);
  write_raw_csv(b, synth_dataset(300, kDefaultSkewWeights, 99), schema, true);
  EXPECT_EQ(a.str(), b.str());
  std::ostringstream c;
  write_raw_csv(c, synth_dataset(300, kDefaultSkewWeights, 100), schema, true);
  EXPECT_NE(a.str(), c.str());
}

TEST(Synth, RejectsDegenerateRequests) {
  std::array<double, 11> zeros{};
  EXPECT_THROW(synth_dataset(500, zeros, 0), ConfigError);
  std::array<double, 11> uniform{};
  uniform.fill(1.0);
  EXPECT_THROW(synth_dataset(50, uniform, 0), ConfigError);
  std::array<double, 11> negative{};
  negative.fill(1.0);
  negative[3] = -0.1;
  EXPECT_THROW(synth_dataset(500, negative, 0), ConfigError);
}

TEST(Synth, PlantedRuleReproducesLabels) {
  auto records = synth_dataset(400, kDefaultSkewWeights, 21);
  for (const auto& rec : records) {
    bool weak_pw = rec.values[0] == "YES";
    bool no_fw = rec.values[1] == "NO";
    long vulns = std::stol(rec.values[7]);
    double cvss = std::stod(rec.values[9]);
    int grade = static_cast<int>(
        std::llround(synth_score_rule(cvss, vulns, weak_pw, no_fw)));
    EXPECT_EQ(grade, std::stoi(rec.values.back()));
  }
}

TEST(Synth, OutputEncodesCleanly) {
  auto records = synth_dataset(250, kDefaultSkewWeights, 13);
  FeatureSchema schema = FeatureSchema::asset_default();
  std::size_t warnings = 0;
  auto ds = encode_dataset(records, schema, &warnings);
  EXPECT_EQ(ds.size(), 250u);
  EXPECT_EQ(warnings, 0u);
}
