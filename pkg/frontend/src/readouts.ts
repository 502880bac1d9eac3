import { GeodesicResponse } from "./types";

/** A displayed number with its provenance. The viewer does no client-side
 * math on measurements: every numeric readout is the verbatim string form
 * of a service-response field, and carries the field name plus raw value so
 * tests can intercept traffic and check the provenance claim. */
export interface Readout {
  label: string;
  text: string;
  unit: string;
  sourceField: keyof GeodesicResponse;
  sourceValue: number;
}

function verbatim(
  label: string,
  unit: string,
  response: GeodesicResponse,
  field: keyof GeodesicResponse,
): Readout | null {
  const value = response[field];
  if (typeof value !== "number") {
    return null;
  }
  return { label, text: String(value), unit, sourceField: field, sourceValue: value };
}

/** Readout rows for an answered geodesic query, in display order. */
export function geodesicReadouts(response: GeodesicResponse): Readout[] {
  const rows = [
    verbatim("geodesic length", "units", response, "length"),
    verbatim("fitted latency", "ms", response, "fitted_latency_ms"),
    verbatim("observed min RTT", "ms", response, "observed_rtt_ms"),
    verbatim("delta (geodesic)", "ms", response, "delta_geo_ms"),
    verbatim("delta (great-circle)", "ms", response, "delta_gcd_ms"),
    verbatim("great-circle distance", "km", response, "gcd_km"),
  ];
  return rows.filter((r): r is Readout => r !== null);
}
