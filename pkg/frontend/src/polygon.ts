/** Ring geometry for the polygon-drawing tool.
 *
 * Drawn areas must be simple rings (no self-intersections); the tool blocks
 * a vertex at draw time rather than letting the server reject the shape.
 * Points are [lat, lon] pairs, matching the wire format.
 */

export type Pt = [number, number];

const sub = (a: Pt, b: Pt): Pt => [a[0] - b[0], a[1] - b[1]];
const cross = (a: Pt, b: Pt): number => a[0] * b[1] - a[1] * b[0];

const orient = (a: Pt, b: Pt, c: Pt): number => {
  const v = cross(sub(b, a), sub(c, a));
  if (Math.abs(v) < 1e-15) return 0;
  return v > 0 ? 1 : -1;
};

const onSegment = (a: Pt, b: Pt, p: Pt): boolean =>
  Math.min(a[0], b[0]) - 1e-15 <= p[0] &&
  p[0] <= Math.max(a[0], b[0]) + 1e-15 &&
  Math.min(a[1], b[1]) - 1e-15 <= p[1] &&
  p[1] <= Math.max(a[1], b[1]) + 1e-15;

/** Whether segments ab and cd intersect (touching counts). */
export function segmentsIntersect(a: Pt, b: Pt, c: Pt, d: Pt): boolean {
  const o1 = orient(a, b, c);
  const o2 = orient(a, b, d);
  const o3 = orient(c, d, a);
  const o4 = orient(c, d, b);
  if (o1 !== o2 && o3 !== o4) return true;
  if (o1 === 0 && onSegment(a, b, c)) return true;
  if (o2 === 0 && onSegment(a, b, d)) return true;
  if (o3 === 0 && onSegment(c, d, a)) return true;
  if (o4 === 0 && onSegment(c, d, b)) return true;
  return false;
}

/**
 * Whether the closed ring through `points` is simple. Adjacent edges are
 * allowed to share their common endpoint; everything else must stay apart.
 */
export function ringIsSimple(points: Pt[]): boolean {
  const n = points.length;
  if (n < 3) return false;
  const edges: [Pt, Pt][] = [];
  for (let i = 0; i < n; i++) {
    const a = points[i]!;
    const b = points[(i + 1) % n]!;
    if (a[0] === b[0] && a[1] === b[1]) return false; // degenerate edge
    edges.push([a, b]);
  }
  for (let i = 0; i < n; i++) {
    for (let j = i + 1; j < n; j++) {
      const adjacent = j === i + 1 || (i === 0 && j === n - 1);
      if (adjacent) continue;
      const [a, b] = edges[i]!;
      const [c, d] = edges[j]!;
      if (segmentsIntersect(a, b, c, d)) return false;
    }
  }
  return true;
}

/**
 * Whether appending `candidate` keeps the open polyline non-self-crossing.
 * Used while drawing: the closing edge is only checked by ringIsSimple when
 * the user finishes the ring.
 */
export function canAppendVertex(points: Pt[], candidate: Pt): boolean {
  const n = points.length;
  if (n === 0) return true;
  const last = points[n - 1]!;
  if (last[0] === candidate[0] && last[1] === candidate[1]) return false;
  // the new edge (last -> candidate) may touch only the edge it extends
  for (let i = 0; i + 1 < n - 1; i++) {
    if (segmentsIntersect(points[i]!, points[i + 1]!, last, candidate)) return false;
  }
  return true;
}
