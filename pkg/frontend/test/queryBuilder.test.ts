import { describe, expect, it } from "vitest";

import {
  atom, BuilderNode, CATEGORIES, combine, dropIntoSequence, fromDsl,
  QueryBuildError, setGap, toDsl,
} from "../src/queryBuilder.js";

function randomNode(rand: () => number, depth = 0): BuilderNode {
  const pick = <T,>(xs: readonly T[]) => xs[Math.floor(rand() * xs.length)];
  const roll = rand();
  if (depth >= 3 || roll < 0.35) return atom(pick(CATEGORIES));
  if (roll < 0.55) {
    const n = 2 + Math.floor(rand() * 3);
    const categories = Array.from({ length: n }, () => pick(CATEGORIES));
    const gaps = Array.from({ length: n - 1 }, () => pick([null, 0, 1, 3, 7] as const));
    return { kind: "seq", categories, gaps: [...gaps] };
  }
  return combine(roll < 0.8 ? "and" : "or", randomNode(rand, depth + 1), randomNode(rand, depth + 1));
}

function mulberry32(seed: number): () => number {
  let a = seed;
  return () => {
    a |= 0; a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

describe("builder <-> DSL bijection", () => {
  it("drag PERSON, distance 7, GPE emits the documented string", () => {
    const node = dropIntoSequence(atom("PERSON"), "GPE", 7);
    expect(toDsl(node)).toBe("PERSON ~7 GPE");
    expect(fromDsl("PERSON ~7 GPE")).toEqual(node);
  });

  it("round-trips 500 random builder layouts exactly", () => {
    const rand = mulberry32(2024);
    for (let i = 0; i < 500; i++) {
      const node = randomNode(rand);
      const text = toDsl(node);
      expect(fromDsl(text), text).toEqual(node);
    }
  });

  it("parses and reprints canonical text stably", () => {
    const cases = [
      "PERSON ~7 GPE",
      "PERSON AND ORG AND GPE AND LAW",
      "PERSON OR ORG AND GPE",
      "PERSON OR (ORG OR GPE)",
      "(PERSON OR ORG) AND GPE",
      "PERSON ORG ~3 GPE",
    ];
    for (const text of cases) {
      expect(toDsl(fromDsl(text))).toBe(text);
    }
  });

  it("preserves tree shape through explicit right-parenthesization", () => {
    const rightLeaning = combine("and", atom("PERSON"), combine("and", atom("ORG"), atom("GPE")));
    const text = toDsl(rightLeaning);
    expect(text).toBe("PERSON AND (ORG AND GPE)");
    expect(fromDsl(text)).toEqual(rightLeaning);
  });
});

describe("builder interactions", () => {
  it("grows a sequence by dropping more tokens", () => {
    let node = atom("PERSON");
    node = dropIntoSequence(node, "ORG", null);
    node = dropIntoSequence(node, "GPE", 3);
    expect(toDsl(node)).toBe("PERSON ORG ~3 GPE");
  });

  it("edits a distance token in place", () => {
    const node = dropIntoSequence(atom("PERSON"), "GPE", 7);
    expect(toDsl(setGap(node, 0, 2))).toBe("PERSON ~2 GPE");
    expect(toDsl(setGap(node, 0, null))).toBe("PERSON GPE");
  });

  it("rejects invalid drops with a message", () => {
    expect(() => atom("NOPE")).toThrow(QueryBuildError);
    const grouped = combine("and", atom("PERSON"), atom("ORG"));
    expect(() => dropIntoSequence(grouped, "GPE", 1)).toThrow(/category tokens/);
    expect(() => setGap(atom("PERSON"), 0, 2)).toThrow(QueryBuildError);
  });
});

describe("DSL errors", () => {
  it.each([
    "",
    "PERSON ~",
    "PERSON AND",
    "(PERSON OR ORG",
    "PERSON ~7 (ORG AND GPE)",
    "WIZARD",
  ])("rejects %j with a position", (text) => {
    let error: unknown;
    try {
      fromDsl(text);
    } catch (e) {
      error = e;
    }
    expect(error).toBeInstanceOf(QueryBuildError);
    expect((error as QueryBuildError).position).toBeGreaterThanOrEqual(0);
  });
});
