/** Small report builders mirroring the documented schemas, so the suite
 * runs without any generated inputs checked in. */

export function layersJson(): string {
  const layers = [
    { layer: 0, count: 24, mean_rho_d: 0.61, mean_cos_dw: -0.12 },
    { layer: 1, count: 24, mean_rho_d: 0.55, mean_cos_dw: 0.03 },
    { layer: 2, count: 24, mean_rho_d: 0.49, mean_cos_dw: 0.2 },
    { layer: 3, count: 24, mean_rho_d: 0.42, mean_cos_dw: 0.31 },
  ];
  return JSON.stringify({ report: "layers", layers }, null, 2);
}

export function densityJson(bins = 3): string {
  const edges = Array.from({ length: bins + 1 }, (_, i) => i / bins);
  const grid = (seed: number) =>
    Array.from({ length: bins }, (_, i) =>
      Array.from({ length: bins }, (_, j) => ((i * bins + j + seed) * 7) % 5),
    );
  const panel = (layers: number[], seed: number) => {
    const gateCounts = grid(seed);
    const total = gateCounts.flat().reduce((a, b) => a + b, 0);
    return {
      bins,
      layers,
      total,
      gate_edges: edges,
      gate_counts: gateCounts,
      mag_edges_x: edges,
      mag_edges_y: edges,
      mag_counts: gateCounts,
    };
  };
  return JSON.stringify(
    {
      report: "density",
      bins,
      n_layers: 4,
      bands: {
        early: panel([0], 1),
        middle: panel([1, 2], 2),
        late: panel([3], 3),
      },
      layers: { "0": panel([0], 1) },
    },
    null,
    2,
  );
}

export function anchorJson(): string {
  return JSON.stringify(
    {
      report: "anchor",
      anchor: "12+",
      window: 2,
      n_layers: 3,
      offsets: [-2, -1, 0, 1, 2],
      diff: [
        [null, 0.1, -0.2, 0.05, null],
        [0.02, -0.1, 0.3, null, 0.01],
        [null, null, 0.15, 0.07, -0.04],
      ],
      mean_a: [
        [null, 0.6, 0.4, 0.55, null],
        [0.52, 0.4, 0.8, null, 0.51],
        [null, null, 0.65, 0.57, 0.46],
      ],
      mean_b: [
        [null, 0.5, 0.6, 0.5, null],
        [0.5, 0.5, 0.5, null, 0.5],
        [null, null, 0.5, 0.5, 0.5],
      ],
      count_a: [
        [0, 3, 3, 3, 0],
        [3, 3, 3, 0, 3],
        [0, 0, 3, 3, 3],
      ],
      count_b: [
        [0, 2, 2, 2, 0],
        [2, 2, 2, 0, 2],
        [0, 0, 2, 2, 2],
      ],
      aligned_a: 3,
      aligned_b: 2,
      excluded_a: 1,
      excluded_b: 2,
    },
    null,
    2,
  );
}

export function paretoCsv(): string {
  return [
    "label,family,params,bpb",
    "wide-80,purewide,719000000,1.02",
    "loop-k4-80,pureloop,238000000,1.11",
    "dual-a50-k4-80,dual,483000000,1.00",
    "dual-a25-k4-80,dual,606000000,0.98",
    "wide-160,purewide,1361000000,0.95",
  ].join("\n");
}

export function countOf(haystack: string, needle: string | RegExp): number {
  const re =
    typeof needle === "string"
      ? new RegExp(needle.replace(/[.*+?^${}()|[\]\\]/g, "\\$&"), "g")
      : new RegExp(needle.source, needle.flags.includes("g") ? needle.flags : needle.flags + "g");
  return (haystack.match(re) ?? []).length;
}
