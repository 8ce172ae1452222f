public class Guard {
    private static boolean made;

    public Guard() { }

    public static Guard build() {
        try {
            if (!made) {
                Guard g = new Guard();
                made = true;
                return g;
            }
        } catch (Exception e) {
            return null;
        }
        return null;
    }
}
