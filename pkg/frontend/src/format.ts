// Display formatting only; exact server values always ride along in data
// attributes so nothing displayed is untraceable to a response.

export function formatIou(value: number | null): string {
  return value === null ? "—" : value.toFixed(3);
}

export function formatFraction(value: number): string {
  return `${Math.round(value * 100)}%`;
}

export function cellKey(condition: string, categoryId: number): string {
  return `${condition}/${categoryId}`;
}
