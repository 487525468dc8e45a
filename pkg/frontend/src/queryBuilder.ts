/** Drag-and-drop concept-query builder.
 *
 * The builder state is a tree that mirrors the server's query AST, so the
 * mapping between builder layout and DSL text is a bijection: `toDsl`
 * prints the canonical form and `fromDsl` parses it back to the identical
 * tree. The grammar (sequence binds tighter than AND, AND tighter than OR):
 *
 *   query := or
 *   or    := and ("OR" and)*
 *   and   := seq ("AND" seq)*
 *   seq   := atom (("~" INT)? atom)*
 *   atom  := CATEGORY | "(" or ")"
 *
 * A `~N` distance token bounds the words strictly between adjacent entity
 * spans; a missing distance means unbounded. Multi-element sequences may
 * contain only category tokens.
 */

export const CATEGORIES = [
  "PERSON", "NORP", "FAC", "ORG", "GPE", "LOC", "PRODUCT", "EVENT",
  "WORK_OF_ART", "LAW", "LANGUAGE", "DATE", "TIME", "PERCENT", "MONEY",
  "QUANTITY", "ORDINAL", "CARDINAL",
] as const;

export type Category = (typeof CATEGORIES)[number];

export type BuilderNode =
  | { kind: "atom"; category: string }
  | { kind: "seq"; categories: string[]; gaps: (number | null)[] }
  | { kind: "and"; left: BuilderNode; right: BuilderNode }
  | { kind: "or"; left: BuilderNode; right: BuilderNode };

export class QueryBuildError extends Error {
  constructor(message: string, public position: number) {
    super(`${message} (at ${position})`);
  }
}

// ---------------------------------------------------------------------------
// Builder interactions

/** Drop a category token next to an existing node, forming a sequence. */
export function dropIntoSequence(
  target: BuilderNode,
  category: string,
  gap: number | null,
): BuilderNode {
  requireCategory(category);
  if (target.kind === "atom") {
    return { kind: "seq", categories: [target.category, category], gaps: [gap] };
  }
  if (target.kind === "seq") {
    return {
      kind: "seq",
      categories: [...target.categories, category],
      gaps: [...target.gaps, gap],
    };
  }
  throw new QueryBuildError("a distance can only join category tokens", 0);
}

/** Combine two builder fragments conjunctively or disjunctively. */
export function combine(op: "and" | "or", left: BuilderNode, right: BuilderNode): BuilderNode {
  return { kind: op, left, right };
}

/** Edit the distance shown inside a sequence's gap token. */
export function setGap(node: BuilderNode, index: number, gap: number | null): BuilderNode {
  if (node.kind !== "seq" || index < 0 || index >= node.gaps.length) {
    throw new QueryBuildError("no such distance token", index);
  }
  if (gap !== null && (!Number.isInteger(gap) || gap < 0)) {
    throw new QueryBuildError("distance must be a non-negative integer", index);
  }
  const gaps = [...node.gaps];
  gaps[index] = gap;
  return { ...node, gaps };
}

export function atom(category: string): BuilderNode {
  requireCategory(category);
  return { kind: "atom", category };
}

function requireCategory(category: string): void {
  if (!(CATEGORIES as readonly string[]).includes(category)) {
    throw new QueryBuildError(`unknown category ${category}`, 0);
  }
}

// ---------------------------------------------------------------------------
// Printing (canonical, matches the backend printer)

function precedence(node: BuilderNode): number {
  if (node.kind === "or") return 1;
  if (node.kind === "and") return 2;
  return 3;
}

export function toDsl(node: BuilderNode): string {
  if (node.kind === "atom") return node.category;
  if (node.kind === "seq") {
    const parts = [node.categories[0]];
    for (let i = 1; i < node.categories.length; i++) {
      const gap = node.gaps[i - 1];
      if (gap !== null) parts.push(`~${gap}`);
      parts.push(node.categories[i]);
    }
    return parts.join(" ");
  }
  const mine = precedence(node);
  let left = toDsl(node.left);
  if (precedence(node.left) < mine) left = `(${left})`;
  let right = toDsl(node.right);
  if (precedence(node.right) <= mine) right = `(${right})`;
  return `${left} ${node.kind === "and" ? "AND" : "OR"} ${right}`;
}

// ---------------------------------------------------------------------------
// Parsing

interface Token {
  text: string;
  position: number;
}

const TOKEN_RE = /\(|\)|~\d+|~|\d+|[A-Za-z_][A-Za-z_0-9]*/y;

function lex(text: string): Token[] {
  const tokens: Token[] = [];
  let i = 0;
  while (i < text.length) {
    if (/\s/.test(text[i])) {
      i += 1;
      continue;
    }
    TOKEN_RE.lastIndex = i;
    const m = TOKEN_RE.exec(text);
    if (!m || m.index !== i) {
      throw new QueryBuildError(`unexpected character ${JSON.stringify(text[i])}`, i);
    }
    tokens.push({ text: m[0], position: i });
    i += m[0].length;
  }
  return tokens;
}

class Parser {
  private pos = 0;

  constructor(private tokens: Token[], private source: string) {}

  parse(): BuilderNode {
    if (this.tokens.length === 0) throw new QueryBuildError("empty query", 0);
    const node = this.parseOr();
    if (this.pos < this.tokens.length) {
      const t = this.tokens[this.pos];
      throw new QueryBuildError(`unexpected ${JSON.stringify(t.text)}`, t.position);
    }
    return node;
  }

  private peek(): Token | undefined {
    return this.tokens[this.pos];
  }

  private parseOr(): BuilderNode {
    let node = this.parseAnd();
    while (this.peek()?.text === "OR") {
      this.pos += 1;
      node = { kind: "or", left: node, right: this.parseAnd() };
    }
    return node;
  }

  private parseAnd(): BuilderNode {
    let node = this.parseSeq();
    while (this.peek()?.text === "AND") {
      this.pos += 1;
      node = { kind: "and", left: node, right: this.parseSeq() };
    }
    return node;
  }

  private parseSeq(): BuilderNode {
    const first = this.parseAtom();
    const elements: BuilderNode[] = [first];
    const gaps: (number | null)[] = [];
    for (;;) {
      const t = this.peek();
      if (!t) break;
      if (t.text.startsWith("~")) {
        this.pos += 1;
        let gapText = t.text.slice(1);
        if (gapText === "") {
          const n = this.peek();
          if (!n || !/^\d+$/.test(n.text)) {
            throw new QueryBuildError("~ must be followed by a number", t.position);
          }
          this.pos += 1;
          gapText = n.text;
        }
        gaps.push(parseInt(gapText, 10));
        elements.push(this.parseAtom());
      } else if (t.text === "(" || this.isCategory(t.text)) {
        gaps.push(null);
        elements.push(this.parseAtom());
      } else {
        break;
      }
    }
    if (elements.length === 1) return first;
    const categories: string[] = [];
    for (const el of elements) {
      if (el.kind !== "atom") {
        throw new QueryBuildError(
          "a sequence may contain only category tokens",
          this.tokens[this.pos - 1]?.position ?? 0,
        );
      }
      categories.push(el.category);
    }
    return { kind: "seq", categories, gaps };
  }

  private parseAtom(): BuilderNode {
    const t = this.peek();
    if (!t) throw new QueryBuildError("unexpected end of query", this.source.length);
    if (t.text === "(") {
      this.pos += 1;
      const inner = this.parseOr();
      const close = this.peek();
      if (close?.text !== ")") {
        throw new QueryBuildError("missing )", close?.position ?? this.source.length);
      }
      this.pos += 1;
      return inner;
    }
    if (this.isCategory(t.text)) {
      this.pos += 1;
      return { kind: "atom", category: t.text.toUpperCase() };
    }
    throw new QueryBuildError(`expected a category or (, got ${JSON.stringify(t.text)}`, t.position);
  }

  private isCategory(text: string): boolean {
    return (CATEGORIES as readonly string[]).includes(text.toUpperCase()) &&
      text !== "AND" && text !== "OR";
  }
}

export function fromDsl(text: string): BuilderNode {
  return new Parser(lex(text), text).parse();
}
