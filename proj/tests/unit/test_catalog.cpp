#include "doctest.h"
#include "fgcard/catalog.hpp"
#include "fgcard/csv.hpp"
#include "fgcard/error.hpp"
#include "fgcard/table.hpp"
#include "test_helpers.hpp"

#include <sstream>

using namespace fgcard;
using fgcard::testing::chain_catalog;

TEST_SUITE("catalog") {
	TEST_CASE("transitive join relations form one group") {
		auto cat = load_schema(nlohmann::json::parse(R"({
			"tables": [
				{"name": "A", "columns": [{"name": "id", "kind": "key"}]},
				{"name": "B", "columns": [{"name": "Aid", "kind": "key"}]},
				{"name": "C", "columns": [{"name": "Aid", "kind": "key"}]}
			],
			"joins": ["A.id=B.Aid", "B.Aid=C.Aid"]
		})"));
		REQUIRE(cat.groups.size() == 1);
		CHECK(cat.groups[0].members.size() == 3);
		CHECK(cat.group_of(KeyRef {"A", "id"}) == cat.group_of(KeyRef {"C", "Aid"}));
	}

	TEST_CASE("unjoined keys get their own group") {
		auto cat = chain_catalog();
		CHECK(cat.groups.size() == 2);
		CHECK(cat.group_of(KeyRef {"A", "id"}) == cat.group_of(KeyRef {"B", "aid"}));
		CHECK(cat.group_of(KeyRef {"B", "id"}) == cat.group_of(KeyRef {"C", "bid"}));
		CHECK(cat.group_of(KeyRef {"A", "id"}) != cat.group_of(KeyRef {"B", "id"}));
		CHECK_THROWS_AS(cat.group_of(KeyRef {"A", "a1"}), SchemaError);
	}

	TEST_CASE("group ids are stable across relation order") {
		auto a = chain_catalog();
		auto desc = schema_descriptor(a);
		std::swap(desc["joins"][0], desc["joins"][1]);
		auto b = load_schema(desc);
		for (auto &key : a.all_join_keys()) {
			CHECK(a.group_of(key) == b.group_of(key));
		}
	}

	TEST_CASE("schema errors") {
		CHECK_THROWS_AS(load_schema(nlohmann::json::parse(R"({"tables": [
			{"name": "A", "columns": [{"name": "id", "kind": "key"}]}], "joins": ["A.id=B.x"]})")),
		                SchemaError);
		CHECK_THROWS_AS(load_schema(nlohmann::json::parse(R"({"tables": [
			{"name": "A", "columns": [{"name": "id", "kind": "key"}, {"name": "v", "kind": "text"}]}],
			"joins": ["A.id=A.v"]})")),
		                SchemaError);
		CHECK_THROWS_AS(load_schema(nlohmann::json::parse(R"({"tables": [
			{"name": "A", "columns": [{"name": "id", "kind": "key"}]},
			{"name": "A", "columns": [{"name": "id", "kind": "key"}]}]})")),
		                SchemaError);
		CHECK_THROWS_AS(load_schema(nlohmann::json::parse(R"({"tables": [
			{"name": "A", "columns": [{"name": "id", "kind": "weird"}]}]})")),
		                SchemaError);
	}

	TEST_CASE("catalog json round trip") {
		auto a = chain_catalog();
		auto b = Catalog::from_json(a.to_json());
		CHECK(b.to_json() == a.to_json());
	}
}

TEST_SUITE("table") {
	TEST_CASE("value counts of a key column") {
		auto cat = chain_catalog();
		std::istringstream in("id,a1\n1,10\n1,11\n2,\n");
		auto res = ingest_table(in, cat.table("A"));
		auto &store = res.stores.at("id");
		CHECK(store.counts() == std::map<int64_t, int64_t> {{1, 2}, {2, 1}});
		CHECK(store.total() == 3);
		CHECK(res.table.column("a1").is_null(2));
	}

	TEST_CASE("nulls are excluded from key stores") {
		auto cat = chain_catalog();
		std::istringstream in("aid,id,b1\n,1,0.5\n3,2,1e3\n");
		auto res = ingest_table(in, cat.table("B"));
		CHECK(res.stores.at("aid").total() == 1);
		CHECK(res.stores.at("aid").ndv() == 1);
		CHECK(res.table.column("b1").reals[1] == doctest::Approx(1000.0));
	}

	TEST_CASE("ingest errors") {
		auto cat = chain_catalog();
		auto bad = [&](const std::string &text) {
			std::istringstream in(text);
			return ingest_table(in, cat.table("A"));
		};
		CHECK_THROWS_AS(bad("id\n1\n"), DataError);
		CHECK_THROWS_AS(bad("id,a1,zz\n1,2,3\n"), DataError);
		CHECK_THROWS_AS(bad("id,a1\nx,2\n"), DataError);
		CHECK_THROWS_AS(bad("id,a1\n1,2,3\n"), DataError);
		CHECK_THROWS_AS(bad("id,a1\n1,\"2\n"), DataError);
	}

	TEST_CASE("store rejects negative counts") {
		ValueCountStore s;
		s.add(1, 2);
		CHECK_THROWS_AS(s.add(1, -3), DataError);
		s.add(1, -2);
		CHECK(s.ndv() == 0);
		CHECK(s.total() == 0);
	}

	TEST_CASE("csv write then read preserves rows") {
		auto cat = chain_catalog();
		auto t = fgcard::testing::table_from_csv(cat, "C", "bid,c1,note\n1,x,\"hello, world\"\n2,,\"say \"\"hi\"\"\"\n");
		std::ostringstream out;
		write_table_csv(out, t);
		auto back = fgcard::testing::table_from_csv(cat, "C", out.str());
		REQUIRE(back.num_rows() == 2);
		CHECK(back.column("note").strs[0] == "hello, world");
		CHECK(back.column("note").strs[1] == "say \"hi\"");
		CHECK(back.column("c1").is_null(1));
	}
}

TEST_SUITE("csv") {
	TEST_CASE("quoted fields and CRLF") {
		std::istringstream in("a,\"b,c\",\"\"\r\n\"x\ny\",2,\n");
		CsvReader reader(in);
		std::vector<CsvField> fields;
		REQUIRE(reader.next(fields));
		REQUIRE(fields.size() == 3);
		CHECK(fields[1].text == "b,c");
		CHECK(fields[2].quoted);
		CHECK(fields[2].text.empty());
		REQUIRE(reader.next(fields));
		CHECK(fields[0].text == "x\ny");
		CHECK(!fields[2].quoted);
		CHECK(!reader.next(fields));
	}
}
