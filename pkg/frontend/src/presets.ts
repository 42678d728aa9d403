// Ready-made sessions. Each entry is pure request data: a formula, an
// agent spec the server knows how to instantiate, and either a pinned
// interpretation or parameters for the server's enumerated presets.

import { CreateRequest } from "./api.js";

export interface Preset {
  name: string;
  blurb: string;
  formula: string;
  agent: unknown;
  interp?: unknown;
  domain?: number;
  seed?: number;
  index?: number;
}

const SQUARES_INTERP = {
  domain: 49,
  letters: {
    "sq/2": {
      tuple: ["z1", "z2"],
      template: {
        op: "Elementary",
        name: "sq",
        args: ["z1", "z2"],
        table: {
          arity: 2,
          rows: [[1, 1], [2, 4], [3, 9], [4, 16], [5, 25], [6, 36], [7, 49]],
        },
      },
    },
  },
};

export const PRESETS: Preset[] = [
  {
    name: "Squaring, mirrored",
    blurb:
      "Solve one squaring problem given another. Pick an input on the right "
      + "board; the copycat answers by relaying through the left one.",
    formula: "(chE x. chA y. (~sq(x,y))) \\/ (chA x. chE y. sq(x,y))",
    agent: { kind: "CCS" },
    interp: SQUARES_INTERP,
  },
  {
    name: "Excluded middle",
    blurb:
      "~P \\/ P over a random interpretation of P. Whatever you start on "
      + "one side gets mirrored on the other.",
    formula: "~P \\/ P",
    agent: { kind: "L8", params: { schema: "a", shape: [] } },
    domain: 3,
    seed: 7,
    index: 0,
  },
  {
    name: "Disjunction shuffle",
    blurb: "The machine routes your play across the swapped disjuncts.",
    formula: "(P \\/ Q) -> (Q \\/ P)",
    agent: { kind: "L8", params: { schema: "b", shape: [] } },
    domain: 3,
    seed: 7,
    index: 0,
  },
  {
    name: "Branching duplication",
    blurb:
      "bcor bcor P -> bcor P: replicate the premise twice over, the "
      + "machine keeps a single conclusion copy in sync.",
    formula: "bcor bcor P -> bcor P",
    agent: { kind: "L5" },
    domain: 3,
    seed: 7,
    index: 0,
  },
];

export function createRequest(p: Preset): CreateRequest {
  const req: CreateRequest = { v: 1, formula: p.formula, agent: p.agent };
  if (p.interp !== undefined) {
    req.interp = p.interp;
  } else {
    req.domain = p.domain;
    req.seed = p.seed;
    req.index = p.index;
  }
  return req;
}
