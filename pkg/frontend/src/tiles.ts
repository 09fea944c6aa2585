/** Overlay tile cache keyed by (scenario, revision, z, x, y).
 *
 * Revision is part of the key, so a scenario edit can never serve a stale
 * overlay: the next paint asks for new keys and old entries age out of the
 * LRU. Decoding is injected so tests (and the DOM shell) choose how PNG
 * bytes become pixels.
 */

export interface TileBitmap {
  width: number;
  height: number;
  /** RGBA, row-major, 4 bytes per pixel */
  pixels: Uint8ClampedArray;
  /** optional decoded image handle (CanvasImageSource in the browser) */
  image?: unknown;
}

export type TileLoader = (url: string) => Promise<TileBitmap>;

export interface TileKeyParts {
  scenarioId: string;
  revision: number;
  z: number;
  x: number;
  y: number;
}

export const tileKey = (k: TileKeyParts): string =>
  `${k.scenarioId}:${k.revision}:${k.z}:${k.x}:${k.y}`;

export class TileCache {
  private readonly entries = new Map<string, TileBitmap>();
  private readonly inflight = new Map<string, Promise<TileBitmap>>();

  constructor(
    private readonly loader: TileLoader,
    private readonly capacity = 256,
  ) {}

  /** Cached bitmap if present; refreshes LRU order. */
  peek(parts: TileKeyParts): TileBitmap | undefined {
    const key = tileKey(parts);
    const hit = this.entries.get(key);
    if (hit) {
      this.entries.delete(key);
      this.entries.set(key, hit);
    }
    return hit;
  }

  /** Fetch (or reuse) the tile for a key; concurrent calls share one load. */
  async get(parts: TileKeyParts, url: string): Promise<TileBitmap> {
    const key = tileKey(parts);
    const hit = this.peek(parts);
    if (hit) return hit;
    const pending = this.inflight.get(key);
    if (pending) return pending;
    const load = this.loader(url)
      .then((bitmap) => {
        this.entries.set(key, bitmap);
        this.evict();
        return bitmap;
      })
      .finally(() => {
        this.inflight.delete(key);
      });
    this.inflight.set(key, load);
    return load;
  }

  /** Drop every cached tile for a scenario (any revision). */
  invalidateScenario(scenarioId: string): void {
    const prefix = `${scenarioId}:`;
    for (const key of [...this.entries.keys()]) {
      if (key.startsWith(prefix)) this.entries.delete(key);
    }
  }

  get size(): number {
    return this.entries.size;
  }

  private evict(): void {
    while (this.entries.size > this.capacity) {
      const oldest = this.entries.keys().next().value as string;
      this.entries.delete(oldest);
    }
  }
}

/** RGBA of one pixel. Out-of-range coordinates clamp to the edge. */
export function samplePixel(
  bitmap: TileBitmap,
  px: number,
  py: number,
): [number, number, number, number] {
  const x = Math.max(0, Math.min(bitmap.width - 1, Math.round(px)));
  const y = Math.max(0, Math.min(bitmap.height - 1, Math.round(py)));
  const i = (y * bitmap.width + x) * 4;
  return [
    bitmap.pixels[i] ?? 0,
    bitmap.pixels[i + 1] ?? 0,
    bitmap.pixels[i + 2] ?? 0,
    bitmap.pixels[i + 3] ?? 255,
  ];
}

/** Perceptual luminance of an RGB triple, 0..255. */
export function luminance(rgb: [number, number, number, number]): number {
  return 0.2126 * rgb[0] + 0.7152 * rgb[1] + 0.0722 * rgb[2];
}

export const cssColor = (rgb: [number, number, number, number]): string =>
  `rgb(${rgb[0]}, ${rgb[1]}, ${rgb[2]})`;
