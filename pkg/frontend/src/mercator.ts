/** Web-mercator math for the slippy map: tiles, pixels, and viewports. */

export const TILE_SIZE = 256;
export const MAX_LAT = 85.05112878;

export interface Viewport {
  centerLat: number;
  centerLon: number;
  zoom: number;
  width: number;
  height: number;
}

export interface TileAddress {
  z: number;
  x: number;
  y: number;
}

export interface PlacedTile extends TileAddress {
  /** top-left corner of the tile on the canvas, in CSS pixels */
  screenX: number;
  screenY: number;
}

const clampLat = (lat: number) => Math.max(-MAX_LAT, Math.min(MAX_LAT, lat));

/** Longitude to a world fraction in [0, 1). */
export function lonToFrac(lon: number): number {
  return (lon + 180) / 360;
}

/** Latitude to a world fraction in [0, 1] (0 at the north edge). */
export function latToFrac(lat: number): number {
  const r = (clampLat(lat) * Math.PI) / 180;
  return (1 - Math.log(Math.tan(r) + 1 / Math.cos(r)) / Math.PI) / 2;
}

export function fracToLon(x: number): number {
  return x * 360 - 180;
}

export function fracToLat(y: number): number {
  const n = Math.PI * (1 - 2 * y);
  return (180 / Math.PI) * Math.atan(Math.sinh(n));
}

/** Tile containing a coordinate at a zoom level. */
export function tileAt(lat: number, lon: number, z: number): TileAddress {
  const n = 1 << z;
  const x = Math.min(n - 1, Math.max(0, Math.floor(lonToFrac(lon) * n)));
  const y = Math.min(n - 1, Math.max(0, Math.floor(latToFrac(lat) * n)));
  return { z, x, y };
}

/** World pixel width/height of the whole map at a zoom level. */
export function worldSize(zoom: number): number {
  return TILE_SIZE * Math.pow(2, zoom);
}

/** Map coordinate to canvas position for a viewport. */
export function latLonToScreen(view: Viewport, lat: number, lon: number): { x: number; y: number } {
  const size = worldSize(view.zoom);
  const cx = lonToFrac(view.centerLon) * size;
  const cy = latToFrac(view.centerLat) * size;
  return {
    x: lonToFrac(lon) * size - cx + view.width / 2,
    y: latToFrac(lat) * size - cy + view.height / 2,
  };
}

/** Canvas position back to map coordinates. */
export function screenToLatLon(view: Viewport, x: number, y: number): { lat: number; lon: number } {
  const size = worldSize(view.zoom);
  const cx = lonToFrac(view.centerLon) * size;
  const cy = latToFrac(view.centerLat) * size;
  return {
    lon: fracToLon((cx + x - view.width / 2) / size),
    lat: fracToLat((cy + y - view.height / 2) / size),
  };
}

/**
 * Tiles needed to cover a viewport, with their canvas positions. The zoom
 * is truncated to an integer tile level; fractional zoom is not supported.
 */
export function visibleTiles(view: Viewport): PlacedTile[] {
  const z = Math.round(view.zoom);
  const n = 1 << z;
  const size = worldSize(z);
  const cx = lonToFrac(view.centerLon) * size;
  const cy = latToFrac(view.centerLat) * size;
  const left = cx - view.width / 2;
  const top = cy - view.height / 2;
  const x0 = Math.floor(left / TILE_SIZE);
  const y0 = Math.floor(top / TILE_SIZE);
  const x1 = Math.floor((left + view.width - 1) / TILE_SIZE);
  const y1 = Math.floor((top + view.height - 1) / TILE_SIZE);
  const tiles: PlacedTile[] = [];
  for (let ty = Math.max(0, y0); ty <= Math.min(n - 1, y1); ty++) {
    for (let tx = Math.max(0, x0); tx <= Math.min(n - 1, x1); tx++) {
      tiles.push({
        z,
        x: tx,
        y: ty,
        screenX: tx * TILE_SIZE - left,
        screenY: ty * TILE_SIZE - top,
      });
    }
  }
  return tiles;
}

/** Pixel offset of a coordinate inside its own tile (0..255 each axis). */
export function pixelInTile(lat: number, lon: number, z: number): { tile: TileAddress; px: number; py: number } {
  const n = 1 << z;
  const fx = lonToFrac(lon) * n;
  const fy = latToFrac(lat) * n;
  const tx = Math.min(n - 1, Math.max(0, Math.floor(fx)));
  const ty = Math.min(n - 1, Math.max(0, Math.floor(fy)));
  return {
    tile: { z, x: tx, y: ty },
    px: Math.min(TILE_SIZE - 1, Math.floor((fx - tx) * TILE_SIZE)),
    py: Math.min(TILE_SIZE - 1, Math.floor((fy - ty) * TILE_SIZE)),
  };
}
