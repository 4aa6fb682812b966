#!/usr/bin/env python3
"""
DUCC Hamiltonian library collector - lists and downloads FCIDUMP files

The public library is a GitHub repository; file listings come from the git
tree API and file contents from the raw content host. Downloads are cached
under ``library.cache_dir`` and reused on later runs.
"""

import logging
import time
from pathlib import Path
from typing import Dict, List, Optional

import requests
from requests.utils import quote

from errors import LibraryFetchError
from settings import LibraryConfig, ReferenceEntry

logger = logging.getLogger(__name__)

# solver name -> ReferenceEntry field
REFERENCE_FIELDS = {
    'fci': 'fci',
    'adapt-vqe': 'adapt_vqe',
    'adapt-gcim': 'adapt_gcim',
    'adapt-gcim(2,2)': 'adapt_gcim_22',
    'qubit-adapt-vqe': 'qubit_adapt_vqe',
    'uccgsd': 'uccgsd',
}


class LibraryCollector:
    """Fetches FCIDUMP files from the DUCC Hamiltonian library with retry and rate limiting"""

    def __init__(self, config: LibraryConfig, session: Optional[requests.Session] = None):
        self.config = config
        self.repository = config.repository
        self.branch = config.branch
        self.api_url = config.api_url.rstrip('/')
        self.raw_url = config.raw_url.rstrip('/')
        self.cache_dir = Path(config.cache_dir)
        self.retry_attempts = max(1, config.retry_attempts)
        self.timeout = config.timeout_seconds
        self.rate_limit_rpm = config.rate_limit_rpm
        self.session = session or requests.Session()

        self.headers = {
            'Accept': 'application/vnd.github+json',
            'User-Agent': 'ducc-solver-pipeline/1.0',
        }
        if config.token:
            self.headers['Authorization'] = f'Bearer {config.token}'

        # Rate limiting
        self.last_request_time = 0.0
        self.request_count = 0
        self.request_window_start = time.time()

        logger.debug(f"Library collector for {self.repository}@{self.branch}, cache {self.cache_dir}")

    def _rate_limit(self):
        """Per-minute request budget plus a minimum spacing between requests"""
        if self.rate_limit_rpm <= 0:
            return
        current_time = time.time()

        if current_time - self.request_window_start >= 60:
            self.request_count = 0
            self.request_window_start = current_time

        if self.request_count >= self.rate_limit_rpm:
            sleep_time = 60 - (current_time - self.request_window_start)
            if sleep_time > 0:
                logger.info(f"Rate limit reached, sleeping for {sleep_time:.2f} seconds")
                time.sleep(sleep_time)
            self.request_count = 0
            self.request_window_start = time.time()

        min_interval = 60.0 / self.rate_limit_rpm
        time_since_last = current_time - self.last_request_time
        if time_since_last < min_interval:
            time.sleep(min_interval - time_since_last)

        self.last_request_time = time.time()
        self.request_count += 1

    def _request(self, url: str, params: Optional[Dict] = None) -> requests.Response:
        """GET with retries; raises LibraryFetchError once attempts are exhausted"""
        last_error = 'no attempt made'
        for attempt in range(self.retry_attempts):
            self._rate_limit()
            try:
                logger.debug(f"GET {url} (attempt {attempt + 1})")
                response = self.session.get(url, headers=self.headers, params=params, timeout=self.timeout)

                if 'X-RateLimit-Remaining' in response.headers:
                    logger.debug(f"Rate limit remaining: {response.headers['X-RateLimit-Remaining']}")

                response.raise_for_status()
                return response

            except requests.exceptions.Timeout:
                last_error = 'timeout'
                logger.warning(f"Request timeout for {url} (attempt {attempt + 1})")
                if attempt < self.retry_attempts - 1:
                    time.sleep(2 ** attempt)

            except requests.exceptions.HTTPError as e:
                status = e.response.status_code if e.response is not None else None
                last_error = f"HTTP {status}"
                if status == 429:
                    retry_after = int(e.response.headers.get('Retry-After', 60))
                    logger.warning(f"Rate limited, waiting {retry_after} seconds")
                    time.sleep(retry_after)
                elif status in (500, 502, 503, 504):
                    logger.warning(f"Server error {status} for {url} (attempt {attempt + 1})")
                    if attempt < self.retry_attempts - 1:
                        time.sleep(2 ** attempt)
                else:
                    logger.error(f"HTTP error {status} for {url}: {e}")
                    break

            except requests.exceptions.RequestException as e:
                last_error = str(e)
                logger.error(f"Request failed for {url} (attempt {attempt + 1}): {e}")
                if attempt < self.retry_attempts - 1:
                    time.sleep(2 ** attempt)

        raise LibraryFetchError(f"Failed to fetch {url} after {self.retry_attempts} attempts ({last_error})")

    def list_files(self, pattern: str = '') -> List[str]:
        """FCIDUMP paths in the library whose path contains ``pattern``"""
        url = f"{self.api_url}/repos/{self.repository}/git/trees/{self.branch}"
        data = self._request(url, params={'recursive': '1'}).json()
        if data.get('truncated'):
            logger.warning("Library tree listing was truncated by the API")

        paths = sorted(
            entry['path'] for entry in data.get('tree', [])
            if entry.get('type') == 'blob'
            and 'FCIDUMP' in entry['path'].upper()
            and pattern in entry['path']
        )
        logger.info(f"Found {len(paths)} FCIDUMP files matching {pattern!r}")
        return paths

    def cache_path(self, path: str) -> Path:
        return self.cache_dir / path

    def fetch(self, path: str, force: bool = False) -> Path:
        """Download ``path`` into the cache (reused unless ``force``) and return the local file"""
        target = self.cache_path(path)
        if target.exists() and not force:
            logger.debug(f"Using cached {target}")
            return target

        url = f"{self.raw_url}/{self.repository}/{self.branch}/{quote(path)}"
        response = self._request(url)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(response.content)
        logger.info(f"Downloaded {path} ({len(response.content)} bytes)")
        return target

    def fetch_references(self, references: Dict[str, ReferenceEntry]) -> Dict[str, Path]:
        """Fetch every reference system that names a library file"""
        local = {}
        for name, entry in references.items():
            if not entry.file:
                continue
            try:
                local[name] = self.fetch(entry.file)
            except LibraryFetchError as e:
                logger.error(f"Could not fetch {name}: {e}")
                raise
        return local


def compare_to_reference(system: str, energies: Dict[str, float], entry: ReferenceEntry) -> List[Dict]:
    """Rows of computed vs tabulated energy for each solver

    ``amplified`` marks solver energies below the CCSD source energy the
    effective Hamiltonian was built from.
    """
    rows = []
    for solver, energy in energies.items():
        field_name = REFERENCE_FIELDS.get(solver)
        reference = getattr(entry, field_name) if field_name else None
        rows.append({
            'system': system,
            'solver': solver,
            'energy': energy,
            'reference': reference,
            'deviation_mha': None if reference is None else 1000.0 * (energy - reference),
            'ccsd': entry.ccsd,
            'amplified': None if entry.ccsd is None else energy < entry.ccsd,
        })
    return rows
