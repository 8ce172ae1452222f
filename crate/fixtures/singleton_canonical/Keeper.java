public class Keeper {
    private static Keeper instance = new Keeper();

    private Keeper() { }

    public static Keeper getInstance() {
        return instance;
    }
}
