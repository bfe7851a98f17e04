/**
 * Missing-information category copy.
 *
 * One static map, contract-identical to the letter-to-name mapping the API
 * serves (see docs/category-names.json at the repository root). A contract
 * test asserts the two never drift apart.
 */

export const CATEGORY_LETTERS = ['A', 'B', 'C', 'E', 'F', 'G'] as const;

export type CategoryLetter = (typeof CATEGORY_LETTERS)[number];

export const CATEGORY_NAMES: Record<CategoryLetter, string> = {
  A: 'Speaker or person',
  B: 'Location',
  C: 'Textual context and subject specification',
  E: 'Non-textual evidence',
  F: 'Date and time period',
  G: 'Other',
};

/** True when `value` is one of the six valid category letters (D is not one). */
export function isCategoryLetter(value: string): value is CategoryLetter {
  return (CATEGORY_LETTERS as readonly string[]).includes(value);
}

/** Badge copy, e.g. "A — Speaker or person". Prefers the server-sent name. */
export function categoryBadgeText(letter: CategoryLetter, name?: string): string {
  return `${letter} — ${name ?? CATEGORY_NAMES[letter]}`;
}
